#!/usr/bin/env python3
"""Generate the bundled mini-treebank, LM corpus and experiment config.

The treebank imitates a romanized Hindi dependency treebank with karaka
labels: documents of a few sentences, objects and subjects that recur
across adjacent sentences, a handful of object-fronted references, and some
sentences that fail the eligibility checks on purpose.

Usage: make_mini_data.py [output_dir]
"""

import os
import random
import sys

PEOPLE = ["raam", "siitaa", "mohan", "giitaa", "ravi", "priyaa", "amit", "nehaa", "sunil", "anjali"]
THINGS = ["kitaab", "patr", "phal", "khaanaa", "ciTThii", "kapRaa", "tohfaa", "akhbaar", "kalam", "gaaRii"]
ADJS = ["nayaa", "puraanaa", "baRaa", "choTaa", "acchaa", "laal"]
PLACES = ["ghar", "baazaar", "skuul", "daftar", "gaaMv", "shahar"]
TIMES = ["kal", "aaj", "subah", "shaam", "phir"]
TRANSITIVE = ["paRhaa", "khariidaa", "likhaa", "dekhaa", "bhejaa", "banaayaa"]
DITRANSITIVE = ["diyaa", "bhejaa", "dikhaayaa", "sunaayaa"]
AUX = ["thaa", "hai"]


def noun_phrase(rng, head_word, head_tag, upos, rel, case=None, adj_prob=0.0, pronoun=False):
    """A constituent: list of (form, lemma, upos, xpos, feats, rel, local_head)."""
    toks = []
    if pronoun:
        toks.append(("us" if case else "vah", "vah", "PRON", "PRP", "_", rel, 0))
        if case:
            toks.append((case, case, "ADP", "PSP", "_", "lwg__psp", 1))
        return toks
    if rng.random() < adj_prob:
        adj = rng.choice(ADJS)
        toks.append((adj, adj, "ADJ", "JJ", "_", "nmod__adj", 2))
        toks.append((head_word, head_word, upos, head_tag, "_", rel, 0))
        if case:
            toks.append((case, case, "ADP", "PSP", "_", "lwg__psp", 2))
    else:
        toks.append((head_word, head_word, upos, head_tag, "_", rel, 0))
        if case:
            toks.append((case, case, "ADP", "PSP", "_", "lwg__psp", 1))
    return toks


def assemble(constituents, verb, aux, punct, root_tag=("VERB", "VM"), feats="VerbForm=Fin"):
    """Lay out preverbal constituents, the verb, an auxiliary and punctuation."""
    rows = []
    heads = []
    for cons in constituents:
        base = len(rows)
        for form, lemma, upos, xpos, f, rel, local in cons:
            rows.append([form, lemma, upos, xpos, f, rel, None])
            heads.append(("local", base + local) if local else ("verb", None))
    verb_index = len(rows) + 1
    rows.append([verb, verb, root_tag[0], root_tag[1], feats, "main", None])
    heads.append(("root", None))
    if aux:
        rows.append([aux, aux, "AUX", "VAUX", "_", "lwg__vaux", None])
        heads.append(("verb", None))
    if punct:
        rows.append([punct, punct, "PUNCT", "SYM", "_", "rsym", None])
        heads.append(("verb", None))
    for row, (kind, value) in zip(rows, heads):
        if kind == "local":
            row[6] = value
        elif kind == "verb":
            row[6] = verb_index
        else:
            row[6] = 0
    return rows


def render(sent_id, rows, newdoc=False, text=True):
    lines = []
    if newdoc:
        lines.append("# newdoc")
    lines.append(f"# sent_id = {sent_id}")
    if text:
        lines.append("# text = " + " ".join(r[0] for r in rows))
    for i, (form, lemma, upos, xpos, feats, rel, head) in enumerate(rows, 1):
        lines.append("\t".join([str(i), form, lemma, upos, xpos, feats, str(head), rel, "_", "_"]))
    return "\n".join(lines) + "\n\n"


def clause(rng, given, pattern):
    """One sentence's constituents. `given` holds entities of the previous
    sentence; `pattern` picks SOV, DOSV or IOSV order for the core arguments."""
    ditransitive = pattern == "IOSV" or rng.random() < 0.35
    people = [p for p in PEOPLE]
    subj = rng.choice([p for p in given if p in PEOPLE] or people) if rng.random() < 0.6 else rng.choice(people)
    obj = rng.choice([t for t in given if t in THINGS] or THINGS) if rng.random() < 0.4 else rng.choice(THINGS)
    recipient = rng.choice([p for p in PEOPLE if p != subj])
    subj_pron = rng.random() < 0.15
    s = noun_phrase(rng, subj, "NNP", "PROPN", "k1", case="ne", pronoun=subj_pron)
    o = noun_phrase(rng, obj, "NN", "NOUN", "k2", adj_prob=0.45)
    parts = {"S": s, "O": o}
    if ditransitive:
        parts["I"] = noun_phrase(rng, recipient, "NNP", "PROPN", "k4", case="ko")
    extras = []
    if rng.random() < 0.45:
        t = rng.choice(TIMES)
        extras.append([(t, t, "ADV", "RB", "_", "k7t", 0)])
    if rng.random() < 0.3:
        extras.append(noun_phrase(rng, rng.choice(PLACES), "NN", "NOUN", "k7p", case="meM"))
    if pattern == "DOSV":
        core = [parts["O"], parts["S"]] + ([parts["I"]] if ditransitive else [])
    elif pattern == "IOSV":
        core = [parts["I"], parts["S"], parts["O"]]
    else:
        core = [parts["S"]] + ([parts["I"]] if ditransitive else []) + [parts["O"]]
    constituents = core[:]
    for e in extras:
        # Adverbials go first or between subject and object.
        pos = rng.choice([0, 1]) if pattern == "SOV" else 0
        constituents.insert(pos, e)
    verb = rng.choice(DITRANSITIVE if ditransitive else TRANSITIVE)
    mentioned = {subj, obj} | ({recipient} if ditransitive else set())
    return constituents, verb, mentioned


def treebank(rng):
    out = []
    docs = 30
    osv_plan = {2: "DOSV", 5: "DOSV", 8: "IOSV", 11: "DOSV", 14: "IOSV", 16: "DOSV", 19: "DOSV", 23: "IOSV",
                26: "DOSV", 28: "DOSV"}
    for d in range(docs):
        given = set()
        n = rng.choice([2, 3, 3, 4])
        for k in range(n):
            sid = f"mini-d{d + 1:02d}-s{k + 1}"
            pattern = osv_plan.get(d, "SOV") if k == n - 1 else "SOV"
            constituents, verb, mentioned = clause(rng, given, pattern)
            rows = assemble(constituents, verb, rng.choice(AUX + [None]), "।")
            out.append(render(sid, rows, newdoc=(k == 0)))
            given = mentioned

    # Sentences that fail eligibility, one document of their own.
    bad = []
    rows = assemble([noun_phrase(rng, "raam", "NNP", "PROPN", "k1", case="ne"),
                     noun_phrase(rng, "kitaab", "NN", "NOUN", "k2")], "paRhii", None, "?")
    bad.append(("mini-x1-question", rows))
    rows = assemble([noun_phrase(rng, "siitaa", "NNP", "PROPN", "k1"),
                     [("ghar", "ghar", "NOUN", "NN", "_", "k7p", 0), ("meM", "meM", "ADP", "PSP", "_", "lwg__psp", 1)]],
                    "soyii", "thii", "।")
    bad.append(("mini-x2-intransitive", rows))
    rows = assemble([noun_phrase(rng, "kalam", "NN", "NOUN", "k2")], "khariidii", "gayii", "।")
    bad.append(("mini-x3-single", rows))
    rows = assemble([noun_phrase(rng, "mohan", "NNP", "PROPN", "k1"),
                     noun_phrase(rng, "gaaRii", "NN", "NOUN", "k2")],
                    "acchii", None, "।", root_tag=("ADJ", "JJ"), feats="_")
    bad.append(("mini-x4-nominal", rows))
    # Non-projective: a postverbal modifier of the fronted object.
    rows = assemble([noun_phrase(rng, "patr", "NN", "NOUN", "k2"),
                     noun_phrase(rng, "amit", "NNP", "PROPN", "k1", case="ne")], "likhaa", None, None)
    rows.append(["lambaa", "lambaa", "ADJ", "JJ", "_", "nmod__adj", 1])
    rows.append(["।", "।", "PUNCT", "SYM", "_", "rsym", 4])
    bad.append(("mini-x5-nonprojective", rows))
    for i, (sid, rows) in enumerate(bad):
        out.append(render(sid, rows, newdoc=(i == 0)))
    return "".join(out)


def lm_corpus(rng, n=2000):
    lines = []
    given = set()
    for i in range(n):
        r = rng.random()
        pattern = "SOV" if r < 0.86 else ("DOSV" if r < 0.95 else "IOSV")
        constituents, verb, given = clause(rng, given, pattern)
        rows = assemble(constituents, verb, rng.choice(AUX + [None]), "।")
        lines.append(" ".join(row[0] for row in rows))
    return "\n".join(lines) + "\n"


RELATIONS = """\
# karaka-style relation labels
subject = k1
direct_object = k2
indirect_object = k4
finite_verb_tags = VM VAUX VERB AUX
finiteness_feature = VerbForm
finite_values = Fin
pronoun_tags = PRP PRON
content_tags = NN NNP NNC JJ RB VM NOUN PROPN ADJ ADV VERB
punct_tags = SYM PUNCT
exclude_punct = true
interrogative_forms = ? !
interrogative_tags = WQ
"""

CONFIG = """\
# Bundled mini experiment. Paths are relative to the repository root.
[run]
treebank = data/mini/treebank.conllu
relations = data/mini/relations.conf
lm-corpus = data/mini/lm_corpus.txt
lm-min-count = 2
variant-cap = 99
variant-seed = 20240601
filter-variants = true
predictors = deplen,is,trigram
folds = 10
cv-seed = 7
judgment-items = 20
judgment-seed = 11
output-dir = out/mini
"""


def main():
    out_dir = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data", "mini")
    os.makedirs(out_dir, exist_ok=True)
    rng = random.Random(20240601)
    with open(os.path.join(out_dir, "treebank.conllu"), "w", encoding="utf-8") as f:
        f.write(treebank(rng))
    with open(os.path.join(out_dir, "lm_corpus.txt"), "w", encoding="utf-8") as f:
        f.write(lm_corpus(random.Random(99)))
    with open(os.path.join(out_dir, "relations.conf"), "w", encoding="utf-8") as f:
        f.write(RELATIONS)
    with open(os.path.join(out_dir, "experiment.ini"), "w", encoding="utf-8") as f:
        f.write(CONFIG)


if __name__ == "__main__":
    main()
