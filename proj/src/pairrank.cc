#include "wordorder/pairrank.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "text_util.h"
#include "wordorder/errors.h"

namespace wordorder {

std::string_view to_string(Predictor p) {
  switch (p) {
    case Predictor::kDependencyLength: return "deplen";
    case Predictor::kInformationStatus: return "is";
    case Predictor::kPcfgSurprisal: return "pcfg";
    case Predictor::kTrigramSurprisal: return "trigram";
    case Predictor::kAdaptiveLstmSurprisal: return "lstm";
  }
  return "?";
}

std::string_view display_name(Predictor p) {
  switch (p) {
    case Predictor::kDependencyLength: return "Dependency length";
    case Predictor::kInformationStatus: return "IS score";
    case Predictor::kPcfgSurprisal: return "PCFG surprisal";
    case Predictor::kTrigramSurprisal: return "Trigram surprisal";
    case Predictor::kAdaptiveLstmSurprisal: return "Adaptive LSTM surprisal";
  }
  return "?";
}

Predictor parse_predictor(std::string_view name) {
  for (Predictor p : kAllPredictors)
    if (to_string(p) == name) return p;
  throw UsageError("unknown predictor '" + std::string(name) +
                   "' (expected deplen, is, pcfg, trigram or lstm)");
}

std::vector<Predictor> parse_predictor_list(std::string_view names) {
  std::vector<Predictor> out;
  for (auto part : internal::split(names, ',')) {
    part = internal::trim(part);
    if (part.empty()) continue;
    const Predictor p = parse_predictor(part);
    if (std::find(out.begin(), out.end(), p) != out.end())
      throw UsageError("predictor '" + std::string(part) + "' listed twice");
    out.push_back(p);
  }
  if (out.empty()) throw UsageError("empty predictor list");
  return out;
}

std::string format_predictor_list(std::span<const Predictor> predictors) {
  std::vector<std::string_view> names;
  for (Predictor p : predictors) names.push_back(to_string(p));
  return internal::join(names, ",");
}

std::optional<double> predictor_value(const FeatureVector &f, Predictor p) {
  switch (p) {
    case Predictor::kDependencyLength: return static_cast<double>(f.dependency_length);
    case Predictor::kInformationStatus: return static_cast<double>(f.is_score);
    case Predictor::kPcfgSurprisal: return f.pcfg_surprisal;
    case Predictor::kTrigramSurprisal: return f.trigram_surprisal;
    case Predictor::kAdaptiveLstmSurprisal: return f.adaptive_lstm_surprisal;
  }
  return std::nullopt;
}

std::string to_string(const Construction &c) {
  return std::string(to_string(c.reference)) + ">" + std::string(to_string(c.variant));
}

Construction parse_construction(std::string_view s) {
  const auto pos = s.find('>');
  if (pos == std::string_view::npos) throw FormatError("bad construction '" + std::string(s) + "'");
  return {parse_order_type(s.substr(0, pos)), parse_order_type(s.substr(pos + 1))};
}

std::string_view to_string(Subset s) {
  switch (s) {
    case Subset::kOverall: return "overall";
    case Subset::kOsv: return "OSV";
    case Subset::kDosv: return "DOSV";
    case Subset::kIosv: return "IOSV";
    case Subset::kCanonical: return "canonical";
    case Subset::kOther: return "other";
  }
  return "?";
}

Subset parse_subset(std::string_view s) {
  for (Subset x : kAllSubsets)
    if (to_string(x) == s) return x;
  throw UsageError("unknown subset '" + std::string(s) + "'");
}

bool in_subset(const Construction &c, Subset s) {
  const bool dosv = c.reference == OrderType::kOsvDoFronted && c.variant == OrderType::kSov;
  const bool iosv = c.reference == OrderType::kOsvIoFronted && c.variant == OrderType::kSov;
  const bool canonical = c.reference == OrderType::kSov &&
                         (c.variant == OrderType::kOsvDoFronted || c.variant == OrderType::kOsvIoFronted);
  switch (s) {
    case Subset::kOverall: return true;
    case Subset::kOsv: return dosv || iosv;
    case Subset::kDosv: return dosv;
    case Subset::kIosv: return iosv;
    case Subset::kCanonical: return canonical;
    case Subset::kOther: return !dosv && !iosv && !canonical;
  }
  return false;
}

PairInstance mirror(const PairInstance &instance) {
  PairInstance m = instance;
  for (double &d : m.delta) d = -d;
  m.label = 1 - instance.label;
  return m;
}

namespace {

// Natural ordering of variant ids by their trailing `.v<k>` number.
bool variant_id_less(const std::string &a, const std::string &b) {
  const auto number = [](const std::string &id) -> long long {
    const auto pos = id.rfind(".v");
    if (pos == std::string::npos) return -1;
    return internal::parse_int(std::string_view(id).substr(pos + 2)).value_or(-1);
  };
  const long long na = number(a);
  const long long nb = number(b);
  if (na != nb) return na < nb;
  return a < b;
}

}  // namespace

std::vector<ReferenceGroup> group_feature_rows(std::span<const FeatureRow> rows) {
  std::vector<ReferenceGroup> groups;
  std::map<std::string, std::size_t> index;
  const auto group_for = [&](const std::string &ref_id) -> ReferenceGroup & {
    const auto [it, inserted] = index.emplace(ref_id, groups.size());
    if (inserted) {
      groups.emplace_back();
      groups.back().ref_id = ref_id;
    }
    return groups[it->second];
  };
  std::set<std::string> have_reference;
  for (const FeatureRow &r : rows) {
    ReferenceGroup &g = group_for(r.reference_id);
    if (r.origin == Origin::kReference) {
      if (!have_reference.insert(r.reference_id).second)
        throw FormatError("reference '" + r.reference_id + "' appears twice");
      g.order_type = r.order_type;
      g.features = r.features;
    } else {
      g.variants.push_back({r.sentence_id, r.order_type, r.features});
    }
  }
  for (const ReferenceGroup &g : groups)
    if (!have_reference.contains(g.ref_id))
      throw FormatError("variants of '" + g.ref_id + "' have no reference row");
  return groups;
}

PairwiseResult pairwise_transform(std::span<const ReferenceGroup> groups,
                                  std::span<const Predictor> predictors) {
  PairwiseResult result;
  result.predictors.assign(predictors.begin(), predictors.end());
  const auto values = [&](const FeatureVector &f) -> std::optional<std::vector<double>> {
    std::vector<double> out;
    out.reserve(predictors.size());
    for (Predictor p : predictors) {
      const auto v = predictor_value(f, p);
      if (!v) return std::nullopt;
      out.push_back(*v);
    }
    return out;
  };

  for (const ReferenceGroup &g : groups) {
    const auto ref = values(g.features);
    std::vector<const VariantFeatures *> variants;
    for (const VariantFeatures &v : g.variants) variants.push_back(&v);
    std::sort(variants.begin(), variants.end(), [](const auto *a, const auto *b) {
      return variant_id_less(a->var_id, b->var_id);
    });
    if (!ref) {
      result.dropped_incomplete += variants.size();
      ++result.skipped_references;
      result.warnings.push_back(g.ref_id + ": reference has absent features; skipped");
      continue;
    }
    std::size_t emitted = 0;
    for (const VariantFeatures *v : variants) {
      const auto var = values(v->features);
      if (!var) {
        ++result.dropped_incomplete;
        continue;
      }
      PairInstance inst;
      inst.ref_id = g.ref_id;
      inst.var_id = v->var_id;
      inst.construction = {g.order_type, v->order_type};
      inst.label = emitted % 2 == 0 ? 1 : 0;
      inst.delta.resize(predictors.size());
      for (std::size_t j = 0; j < predictors.size(); ++j)
        inst.delta[j] = inst.label == 1 ? (*ref)[j] - (*var)[j] : (*var)[j] - (*ref)[j];
      result.instances.push_back(std::move(inst));
      ++emitted;
    }
    if (emitted == 0) {
      ++result.skipped_references;
      result.warnings.push_back(g.ref_id + ": no variants with complete features; skipped");
    }
  }
  return result;
}

NormalizedInstances zscore_normalize(std::span<const PairInstance> instances) {
  if (instances.size() < 2)
    throw StatisticsError("z-scoring needs at least two instances, got " +
                          std::to_string(instances.size()));
  const std::size_t p = instances.front().delta.size();
  Normalization stats;
  stats.columns.resize(p);
  const double n = static_cast<double>(instances.size());
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0;
    for (const PairInstance &inst : instances) mean += inst.delta.at(j);
    mean /= n;
    double ss = 0;
    for (const PairInstance &inst : instances) {
      const double d = inst.delta[j] - mean;
      ss += d * d;
    }
    double sd = std::sqrt(ss / (n - 1));
    // Relative threshold: a column equal up to rounding is constant.
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      sd = 0;
      stats.warnings.push_back("column " + std::to_string(j) + " is constant; set to zero");
    }
    stats.columns[j] = {mean, sd};
  }
  NormalizedInstances out;
  out.instances = apply_normalization(instances, stats);
  out.stats = std::move(stats);
  return out;
}

std::vector<PairInstance> apply_normalization(std::span<const PairInstance> instances,
                                              const Normalization &stats) {
  std::vector<PairInstance> out(instances.begin(), instances.end());
  for (PairInstance &inst : out) {
    if (inst.delta.size() != stats.columns.size())
      throw StatisticsError("instance width does not match normalization statistics");
    for (std::size_t j = 0; j < inst.delta.size(); ++j) {
      const ColumnStats &c = stats.columns[j];
      inst.delta[j] = c.sd == 0 ? 0.0 : (inst.delta[j] - c.mean) / c.sd;
    }
  }
  return out;
}

void write_pair_table(std::ostream &out, std::span<const PairInstance> instances,
                      std::span<const Predictor> predictors,
                      std::span<const std::string> header_lines) {
  for (const std::string &h : header_lines) out << "# " << h << '\n';
  out << "ref_id\tvar_id\tlabel\tconstruction";
  for (Predictor p : predictors) out << '\t' << to_string(p);
  out << '\n';
  for (const PairInstance &inst : instances) {
    out << inst.ref_id << '\t' << inst.var_id << '\t' << inst.label << '\t'
        << to_string(inst.construction);
    for (double d : inst.delta) out << '\t' << internal::format_double(d);
    out << '\n';
  }
}

PairTable read_pair_table(std::istream &in) {
  PairTable table;
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    if (raw.empty() || raw.front() == '#') continue;
    const auto fields = internal::split(raw, '\t');
    if (!header_seen) {
      if (fields.size() < 5 || fields[0] != "ref_id" || fields[2] != "label")
        throw ParseError(line_no, "missing pair table header");
      for (std::size_t i = 4; i < fields.size(); ++i) table.predictors.push_back(parse_predictor(fields[i]));
      header_seen = true;
      continue;
    }
    if (fields.size() != 4 + table.predictors.size()) throw ParseError(line_no, "wrong column count");
    PairInstance inst;
    inst.ref_id = std::string(fields[0]);
    inst.var_id = std::string(fields[1]);
    const auto label = internal::parse_int(fields[2]);
    if (!label || (*label != 0 && *label != 1)) throw ParseError(line_no, "label must be 0 or 1");
    inst.label = static_cast<int>(*label);
    inst.construction = parse_construction(fields[3]);
    for (std::size_t i = 4; i < fields.size(); ++i) {
      const auto v = internal::parse_double(fields[i]);
      if (!v) throw ParseError(line_no, "malformed delta '" + std::string(fields[i]) + "'");
      inst.delta.push_back(*v);
    }
    table.instances.push_back(std::move(inst));
  }
  if (!header_seen) throw FormatError("empty pair table");
  return table;
}

void write_stats_table(std::ostream &out, const Normalization &stats,
                       std::span<const Predictor> predictors,
                       std::span<const std::string> header_lines) {
  for (const std::string &h : header_lines) out << "# " << h << '\n';
  out << "predictor\tmean\tsd\n";
  for (std::size_t j = 0; j < stats.columns.size(); ++j) {
    out << (j < predictors.size() ? std::string(to_string(predictors[j])) : std::to_string(j)) << '\t'
        << internal::format_double(stats.columns[j].mean) << '\t'
        << internal::format_double(stats.columns[j].sd) << '\n';
  }
}

}  // namespace wordorder
