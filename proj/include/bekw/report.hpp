#pragma once

// Report envelope and renderers for the CLI.  Every subcommand emits one
// envelope: command, echoed inputs, results, tool version, seed (only where
// randomness exists), warnings.  No timestamps or hostnames ever enter the
// payload, so byte-identical reruns stay byte-identical.  JSON uses
// shortest-round-trip doubles (re-parsing recovers the exact bit pattern);
// CSV uses %.17g for the same reason.

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bekw/discrim.hpp"
#include "bekw/dist.hpp"
#include "bekw/distances.hpp"
#include "bekw/fit.hpp"
#include "bekw/mc.hpp"
#include "bekw/pseudo.hpp"

namespace bekw {

using ojson = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "1.0.0";

struct ReportEnvelope {
  std::string command;
  ojson inputs = ojson::object();
  ojson results = ojson::object();
  std::optional<std::uint64_t> seed;
  std::vector<std::string> warnings;
};

inline ojson envelope_json(const ReportEnvelope& env) {
  ojson j;
  j["command"] = env.command;
  j["inputs"] = env.inputs;
  j["results"] = env.results;
  j["tool_version"] = kToolVersion;
  if (env.seed) j["seed"] = *env.seed;
  j["warnings"] = env.warnings;
  return j;
}

inline ojson json_of(const FitResult& f) {
  ojson j;
  j["model"] = model_name(f.model);
  j[f.model == Model::beta ? "a" : "alpha"] = f.p1;
  j[f.model == Model::beta ? "b" : "beta"] = f.p2;
  j["loglik_at_max"] = f.loglik_at_max;
  j["iterations"] = f.iterations;
  j["converged"] = f.converged;
  j["grad_norm"] = f.grad_norm;
  return j;
}

inline ojson json_of(const PseudoTruePair& p) {
  ojson j;
  j["source_model"] = model_name(p.source_model);
  j["source_p1"] = p.source_p1;
  j["source_p2"] = p.source_p2;
  j["target_model"] =
      model_name(p.source_model == Model::beta ? Model::kumaraswamy : Model::beta);
  j["target_p1"] = p.target_p1;
  j["target_p2"] = p.target_p2;
  j["lambda_at_max"] = p.lambda_at_max;
  j["kkt_residual"] = p.kkt_residual;
  j["quad_gap"] = p.quad_gap;
  return j;
}

inline ojson json_of(const AsymptoticMoments& m) {
  ojson j;
  j["null_model"] = model_name(m.null_model);
  j["am"] = m.am;
  j["av"] = m.av;
  j["pseudo"] = json_of(m.pseudo);
  j["am_series"] = m.am_series;
  j["av_series"] = m.av_series;
  j["am_series_gap"] = m.am_series_gap;
  j["av_series_gap"] = m.av_series_gap;
  j["series_flagged"] = m.series_flagged;
  return j;
}

inline ojson json_of(const SelectionReport& r) {
  ojson j;
  j["n"] = r.n;
  j["t_stat"] = r.t_stat;
  j["t_expanded_residual"] = r.t_expanded_residual;
  j["fit_beta"] = json_of(r.fit_beta);
  j["fit_kw"] = json_of(r.fit_kw);
  j["moments_beta"] = json_of(r.mom_beta);
  j["moments_kw"] = json_of(r.mom_kw);
  j["pcs_beta"] = r.pcs_beta;
  j["pcs_kw"] = r.pcs_kw;
  j["decision"] = model_name(r.decision);
  j["decision_rule"] =
      r.decision_rule == DecisionRule::max_pcs ? "max-pcs" : "akaike-sign";
  j["indistinguishable"] = r.indistinguishable;
  if (r.simulated_pcs) {
    j["simulated_pcs_beta"] = r.simulated_pcs->first;
    j["simulated_pcs_kw"] = r.simulated_pcs->second;
  }
  return j;
}

inline ojson json_of(const SampleSizePlan& p) {
  ojson j;
  j["null_model"] = model_name(p.null_model);
  j[p.null_model == Model::beta ? "a" : "alpha"] = p.p1;
  j[p.null_model == Model::beta ? "b" : "beta"] = p.p2;
  j["p"] = p.p;
  j["z_p"] = p.z_p;
  j["n_required"] = p.n_required;
  j["hellinger"] = p.hellinger;
  j["ks"] = p.ks;
  j["moments"] = json_of(p.moments);
  return j;
}

inline ojson json_of(const McResult& r) {
  ojson j;
  j["empirical_pcs"] = r.empirical_pcs;
  j["successes"] = r.successes;
  j["reps"] = r.reps;
  j["std_err"] = r.std_err;
  j["asymptotic_pcs"] = r.asymptotic_pcs;
  j["fit_failures"] = r.fit_failures;
  j["failure_warning"] = r.failure_warning;
  return j;
}

inline ojson json_of(const DistanceReport& d) {
  ojson j;
  j["hellinger"] = d.hellinger;
  j["ks"] = d.ks;
  j["ks_argmax"] = d.ks_argmax;
  j["hellinger_method"] =
      d.hellinger_method == DistanceReport::Method::series ? "series" : "quadrature";
  j["series_quadrature_gap"] = d.series_quadrature_gap;
  return j;
}

inline ojson json_of(const TableResult& t) {
  ojson j;
  j["which"] = t.which;
  j["title"] = t.title;
  j["row_keys"] = t.row_keys;
  j["column_keys"] = t.column_keys;
  ojson cells = ojson::array();
  for (const TableEntry& e : t.entries) {
    ojson c;
    c["row"] = e.row;
    c["column"] = e.column;
    c["value"] = e.value;
    if (e.reference) {
      c["reference"] = *e.reference;
      c["deviation"] = e.deviation ? *e.deviation : e.value - *e.reference;
    }
    cells.push_back(std::move(c));
  }
  j["entries"] = std::move(cells);
  j["warnings"] = t.warnings;
  return j;
}

namespace detail {

inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

inline std::string scalar_text(const ojson& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();  // numbers/bools/null: shortest round-trip form
}

inline bool all_scalars(const ojson& arr) {
  for (const auto& e : arr)
    if (e.is_object() || e.is_array()) return false;
  return true;
}

inline void render_node(std::ostream& os, const ojson& node, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  for (const auto& [key, val] : node.items()) {
    if (val.is_object()) {
      os << pad << key << ":\n";
      render_node(os, val, indent + 1);
    } else if (val.is_array() && !all_scalars(val)) {
      os << pad << key << ":\n";
      int i = 0;
      for (const auto& e : val) {
        os << pad << "  [" << i++ << "]\n";
        render_node(os, e, indent + 2);
      }
    } else if (val.is_array()) {
      os << pad << key << ":";
      for (const auto& e : val) os << ' ' << scalar_text(e);
      os << '\n';
    } else {
      os << pad << key << ": " << scalar_text(val) << '\n';
    }
  }
}

}  // namespace detail

// Plain-text rendering: a key/value walk of the same envelope JSON.
inline void render_text(std::ostream& os, const ReportEnvelope& env) {
  detail::render_node(os, envelope_json(env), 0);
}

// Aligned grid for a reproduced table (text format prints this after the
// generic envelope header fields).
inline std::string table_grid(const TableResult& t) {
  const std::size_t rows = t.row_keys.size(), cols = t.column_keys.size();
  std::vector<std::string> cell(rows * cols);
  for (const TableEntry& e : t.entries) {
    std::size_t r = 0, c = 0;
    for (; r < rows && t.row_keys[r] != e.row; ++r) {}
    for (; c < cols && t.column_keys[c] != e.column; ++c) {}
    if (r < rows && c < cols) cell[r * cols + c] = detail::scalar_text(ojson(e.value));
  }
  std::vector<std::size_t> width(cols + 1, 0);
  for (std::size_t r = 0; r < rows; ++r)
    width[0] = std::max(width[0], t.row_keys[r].size());
  for (std::size_t c = 0; c < cols; ++c) {
    width[c + 1] = t.column_keys[c].size();
    for (std::size_t r = 0; r < rows; ++r)
      width[c + 1] = std::max(width[c + 1], cell[r * cols + c].size());
  }
  auto put = [](std::string& out, const std::string& s, std::size_t w) {
    out += s;
    out.append(w - s.size() + 2, ' ');
  };
  std::string out;
  put(out, "", width[0]);
  for (std::size_t c = 0; c < cols; ++c) put(out, t.column_keys[c], width[c + 1]);
  out += '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    put(out, t.row_keys[r], width[0]);
    for (std::size_t c = 0; c < cols; ++c) put(out, cell[r * cols + c], width[c + 1]);
    out += '\n';
  }
  return out;
}

// CSV long form, one line per cell: row,column,value,reference,deviation
// (the last two empty when the cell has no published counterpart).
inline void table_csv(std::ostream& os, const TableResult& t) {
  os << "row,column,value,reference,deviation\n";
  for (const TableEntry& e : t.entries) {
    os << e.row << ',' << e.column << ',' << detail::g17(e.value) << ',';
    if (e.reference) {
      os << detail::g17(*e.reference) << ','
         << detail::g17(e.deviation ? *e.deviation : e.value - *e.reference);
    } else {
      os << ',';
    }
    os << '\n';
  }
}

}  // namespace bekw
