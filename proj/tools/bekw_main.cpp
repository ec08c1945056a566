// bekw: command-line front end for the beta-vs-Kumaraswamy discrimination
// library.  One subcommand per operation; every run prints a single report
// envelope (text or JSON; CSV for tables and distance curves) with no
// timestamps or hostnames, so identical invocations are byte-identical.
//
// Exit codes: 0 success, 2 input error, 3 solver/accuracy failure, 64 usage.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "bekw/discrim.hpp"
#include "bekw/dist.hpp"
#include "bekw/distances.hpp"
#include "bekw/errors.hpp"
#include "bekw/fit.hpp"
#include "bekw/ingest.hpp"
#include "bekw/mc.hpp"
#include "bekw/pseudo.hpp"
#include "bekw/report.hpp"
#include "bekw/rng.hpp"

namespace {

using bekw::Model;
using bekw::ojson;

Model parse_model(const std::string& s) {
  if (s == "beta") return Model::beta;
  if (s == "kw" || s == "kumaraswamy") return Model::kumaraswamy;
  throw bekw::input_error("unknown model '" + s + "' (use beta, kw, or kumaraswamy)");
}

// The four shape flags; which pair is required depends on the family chosen
// by --null/--from, so presence is checked after parsing, not by CLI11.
struct ShapeFlags {
  double a = 0.0, b = 0.0, alpha = 0.0, beta = 0.0;
  CLI::Option *oa = nullptr, *ob = nullptr, *oalpha = nullptr, *obeta = nullptr;

  void attach(CLI::App* cmd) {
    oa = cmd->add_option("--a", a, "beta first shape");
    ob = cmd->add_option("--b", b, "beta second shape");
    oalpha = cmd->add_option("--alpha", alpha, "Kumaraswamy first shape");
    obeta = cmd->add_option("--beta", beta, "Kumaraswamy second shape");
  }
  std::pair<double, double> resolve(Model m) const {
    if (m == Model::beta) {
      if (!oa->count() || !ob->count())
        throw bekw::input_error("a beta law needs --a and --b");
      return {a, b};
    }
    if (!oalpha->count() || !obeta->count())
      throw bekw::input_error("a Kumaraswamy law needs --alpha and --beta");
    return {alpha, beta};
  }
  ojson echo(Model m, double p1, double p2) const {
    ojson j;
    j[m == Model::beta ? "a" : "alpha"] = p1;
    j[m == Model::beta ? "b" : "beta"] = p2;
    return j;
  }
};

struct IngestFlags {
  std::string path;
  std::string column;
  std::string delimiter = "auto";
  std::vector<double> rescale;

  void attach(CLI::App* cmd) {
    cmd->add_option("data", path, "delimited text file of observations")->required();
    cmd->add_option("--column", column,
                    "column to read: header name or 1-based index (default: first)");
    cmd->add_option("--delimiter", delimiter, "field delimiter")
        ->check(CLI::IsMember({"auto", "comma", "tab", "space"}));
    cmd->add_option("--rescale", rescale,
                    "interval c d: data on (c,d) are mapped to (x-c)/(d-c)")
        ->expected(2);
  }
  bekw::DataFileSpec spec() const {
    bekw::DataFileSpec s;
    s.path = path;
    s.column = column;
    s.delimiter = delimiter == "comma"   ? ','
                  : delimiter == "tab"   ? '\t'
                  : delimiter == "space" ? ' '
                                         : '\0';
    if (!rescale.empty()) s.rescale = std::make_pair(rescale[0], rescale[1]);
    return s;
  }
  ojson echo(const bekw::Sample& s) const {
    ojson j;
    j["data"] = path;
    j["column"] = column.empty() ? ojson() : ojson(column);
    j["delimiter"] = delimiter;
    j["rescale"] = rescale.empty() ? ojson() : ojson(rescale);
    j["n"] = s.n();
    j["values"] = s.values;
    return j;
  }
};

int emit(const bekw::ReportEnvelope& env, const std::string& format) {
  if (format == "json")
    std::cout << bekw::envelope_json(env).dump(2) << '\n';
  else
    bekw::render_text(std::cout, env);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bekw: decide whether a beta or a Kumaraswamy model fits data on (0,1)"};
  app.require_subcommand(1);
  std::string format = "text";
  app.add_option("--format", format, "output format (csv: tables and distance --curve only)")
      ->check(CLI::IsMember({"text", "json", "csv"}));

  auto* cfit = app.add_subcommand("fit", "maximum-likelihood fit of one family");
  cfit->fallthrough();
  IngestFlags fit_in;
  fit_in.attach(cfit);
  std::string fit_model = "beta";
  cfit->add_option("--model", fit_model, "family to fit (default beta)");

  auto* csel = app.add_subcommand(
      "select", "fit both families and choose by the likelihood-ratio statistic");
  csel->fallthrough();
  IngestFlags sel_in;
  sel_in.attach(csel);
  std::string sel_rule = "max-pcs";
  csel->add_option("--rule", sel_rule, "decision rule")
      ->check(CLI::IsMember({"max-pcs", "akaike-sign"}));
  std::size_t sel_sim = 0;
  csel->add_option("--simulate", sel_sim,
                   "parametric-bootstrap replicates at the fitted parameters (0 = off)");
  std::uint64_t sel_seed = 0;
  csel->add_option("--seed", sel_seed, "master seed for --simulate");
  unsigned sel_workers = 0;
  csel->add_option("--workers", sel_workers, "worker threads (0 = env/hardware)");

  auto* cpcs = app.add_subcommand("pcs", "asymptotic probability of correct selection");
  cpcs->fallthrough();
  std::string pcs_null = "beta";
  cpcs->add_option("--null", pcs_null, "true family")->required();
  ShapeFlags pcs_sh;
  pcs_sh.attach(cpcs);
  long pcs_n = 0;
  cpcs->add_option("--n", pcs_n, "sample size")->required();

  auto* cpse = app.add_subcommand("pseudo", "pseudo-true parameters of the rival family");
  cpse->fallthrough();
  std::string pse_from = "beta";
  cpse->add_option("--from", pse_from, "source family")->required();
  ShapeFlags pse_sh;
  pse_sh.attach(cpse);

  auto* cmom = app.add_subcommand(
      "moments", "asymptotic mean and variance of the per-observation log-likelihood ratio");
  cmom->fallthrough();
  std::string mom_null = "beta";
  cmom->add_option("--null", mom_null, "true family")->required();
  ShapeFlags mom_sh;
  mom_sh.attach(cmom);

  auto* cssz = app.add_subcommand(
      "samplesize", "minimum n for a requested probability of correct selection");
  cssz->fallthrough();
  std::string ssz_null = "beta";
  cssz->add_option("--null", ssz_null, "true family")->required();
  ShapeFlags ssz_sh;
  ssz_sh.attach(cssz);
  double ssz_p = 0.0;
  cssz->add_option("--p", ssz_p, "protection level in (0.5, 1)")->required();

  auto* cdst = app.add_subcommand(
      "distance", "Hellinger and KS distance between a beta and a Kumaraswamy law");
  cdst->fallthrough();
  ShapeFlags dst_sh;
  dst_sh.attach(cdst);
  bool dst_curve = false;
  cdst->add_flag("--curve", dst_curve,
                 "sweep one shape, comparing each law with its pseudo-true rival");
  std::string dst_vary = "a";
  cdst->add_option("--vary", dst_vary, "which shape the curve sweeps")
      ->check(CLI::IsMember({"a", "alpha"}));
  double dst_second = 2.5;
  cdst->add_option("--second", dst_second, "fixed second shape for --curve");
  double dst_from = 0.2, dst_to = 5.0;
  cdst->add_option("--from", dst_from, "curve start");
  cdst->add_option("--to", dst_to, "curve end");
  std::size_t dst_points = 25;
  cdst->add_option("--points", dst_points, "curve grid size");

  auto* csim = app.add_subcommand(
      "simulate", "Monte Carlo estimate of the probability of correct selection");
  csim->fallthrough();
  std::string sim_null = "beta";
  csim->add_option("--null", sim_null, "true family")->required();
  ShapeFlags sim_sh;
  sim_sh.attach(csim);
  std::size_t sim_n = 100;
  csim->add_option("--n", sim_n, "sample size per replicate");
  std::size_t sim_reps = 5000;
  csim->add_option("--reps", sim_reps, "number of replicates");
  std::uint64_t sim_seed = 0;
  csim->add_option("--seed", sim_seed, "master seed");
  unsigned sim_workers = 0;
  csim->add_option("--workers", sim_workers, "worker threads (0 = env/hardware)");

  auto* ctab = app.add_subcommand("tables", "recompute a published table (1-6)");
  ctab->fallthrough();
  int tab_which = 0;
  ctab->add_option("--which", tab_which, "table number 1-6")->required();
  double tab_ob = 0.0, tab_obeta = 0.0;
  CLI::Option* o_ob =
      ctab->add_option("--override-b", tab_ob, "replace the default beta second shape");
  CLI::Option* o_obeta = ctab->add_option("--override-beta", tab_obeta,
                                          "replace the default Kumaraswamy second shape");
  std::size_t tab_reps = 0;
  CLI::Option* o_tr = ctab->add_option("--reps", tab_reps, "tables 5-6: replicates per cell");
  std::uint64_t tab_seed = 0;
  CLI::Option* o_ts = ctab->add_option("--seed", tab_seed, "tables 5-6: master seed");
  unsigned tab_workers = 0;
  CLI::Option* o_tw = ctab->add_option("--workers", tab_workers, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 64;
  }

  try {
    if (format == "csv" && !(ctab->parsed() || (cdst->parsed() && dst_curve)))
      throw bekw::input_error("csv output is only available for tables and distance --curve");

    if (cfit->parsed()) {
      const bekw::Sample s = bekw::ingest(fit_in.spec());
      const Model m = parse_model(fit_model);
      const bekw::FitResult r = m == Model::beta ? bekw::fit_beta(s) : bekw::fit_kw(s);
      bekw::ReportEnvelope env;
      env.command = "fit";
      env.inputs = fit_in.echo(s);
      env.inputs["model"] = bekw::model_name(m);
      env.results = bekw::json_of(r);
      return emit(env, format);
    }

    if (csel->parsed()) {
      const bekw::Sample s = bekw::ingest(sel_in.spec());
      const bekw::DecisionRule rule = sel_rule == "max-pcs"
                                          ? bekw::DecisionRule::max_pcs
                                          : bekw::DecisionRule::akaike_sign;
      bekw::SelectionReport r = bekw::select(s, rule);
      bekw::ReportEnvelope env;
      env.command = "select";
      env.inputs = sel_in.echo(s);
      env.inputs["rule"] = sel_rule;
      env.inputs["simulate"] = sel_sim;
      if (sel_sim > 0) {
        bekw::McConfig cb;
        cb.null_model = Model::beta;
        cb.p1 = r.fit_beta.p1;
        cb.p2 = r.fit_beta.p2;
        cb.n = s.n();
        cb.reps = sel_sim;
        cb.master_seed = sel_seed;
        cb.workers = sel_workers;
        bekw::McConfig ck = cb;
        ck.null_model = Model::kumaraswamy;
        ck.p1 = r.fit_kw.p1;
        ck.p2 = r.fit_kw.p2;
        ck.master_seed = bekw::derive_seed(sel_seed, 1);
        const bekw::McResult mb = bekw::simulate_pcs(cb);
        const bekw::McResult mk = bekw::simulate_pcs(ck);
        r.simulated_pcs = std::make_pair(mb.empirical_pcs, mk.empirical_pcs);
        if (mb.failure_warning || mk.failure_warning)
          env.warnings.push_back(
              "parametric bootstrap: more than 1% of replicates failed to fit");
        env.seed = sel_seed;
      }
      if (r.indistinguishable)
        env.warnings.push_back(
            "the families are practically indistinguishable here (PCS gap < 0.01)");
      env.results = bekw::json_of(r);
      return emit(env, format);
    }

    if (cpcs->parsed()) {
      const Model nul = parse_model(pcs_null);
      const auto [p1, p2] = pcs_sh.resolve(nul);
      const bekw::AsymptoticMoments mom = bekw::asymptotic_moments(nul, p1, p2);
      const double val = bekw::pcs_from_moments(mom, pcs_n);
      bekw::ReportEnvelope env;
      env.command = "pcs";
      env.inputs["null"] = bekw::model_name(nul);
      env.inputs.update(pcs_sh.echo(nul, p1, p2));
      env.inputs["n"] = pcs_n;
      env.results["pcs"] = val;
      env.results["moments"] = bekw::json_of(mom);
      if (std::fabs(mom.am) <= 1e-10 && mom.av <= 1e-10)
        env.warnings.push_back(
            "parameters lie in the intersection family: the models coincide and "
            "PCS = 0.5 at every n");
      return emit(env, format);
    }

    if (cpse->parsed()) {
      const Model src = parse_model(pse_from);
      const auto [p1, p2] = pse_sh.resolve(src);
      const bekw::PseudoTruePair pt = bekw::pseudo_true(src, p1, p2);
      bekw::ReportEnvelope env;
      env.command = "pseudo";
      env.inputs["from"] = bekw::model_name(src);
      env.inputs.update(pse_sh.echo(src, p1, p2));
      env.results = bekw::json_of(pt);
      return emit(env, format);
    }

    if (cmom->parsed()) {
      const Model nul = parse_model(mom_null);
      const auto [p1, p2] = mom_sh.resolve(nul);
      const bekw::AsymptoticMoments mom = bekw::asymptotic_moments(nul, p1, p2);
      bekw::ReportEnvelope env;
      env.command = "moments";
      env.inputs["null"] = bekw::model_name(nul);
      env.inputs.update(mom_sh.echo(nul, p1, p2));
      env.results = bekw::json_of(mom);
      if (mom.series_flagged)
        env.warnings.push_back(
            "series cross-check disagrees with quadrature beyond 1e-6; "
            "quadrature values reported");
      return emit(env, format);
    }

    if (cssz->parsed()) {
      const Model nul = parse_model(ssz_null);
      const auto [p1, p2] = ssz_sh.resolve(nul);
      const bekw::SampleSizePlan plan = bekw::min_sample_size(nul, p1, p2, ssz_p);
      bekw::ReportEnvelope env;
      env.command = "samplesize";
      env.inputs["null"] = bekw::model_name(nul);
      env.inputs.update(ssz_sh.echo(nul, p1, p2));
      env.inputs["p"] = ssz_p;
      env.results = bekw::json_of(plan);
      return emit(env, format);
    }

    if (cdst->parsed() && !dst_curve) {
      if (!dst_sh.oa->count() || !dst_sh.ob->count() || !dst_sh.oalpha->count() ||
          !dst_sh.obeta->count())
        throw bekw::input_error("distance needs --a --b --alpha --beta (or --curve)");
      const bekw::DistanceReport d = bekw::distance_report(
          bekw::BetaParams{dst_sh.a, dst_sh.b}, bekw::KwParams{dst_sh.alpha, dst_sh.beta});
      bekw::ReportEnvelope env;
      env.command = "distance";
      env.inputs["a"] = dst_sh.a;
      env.inputs["b"] = dst_sh.b;
      env.inputs["alpha"] = dst_sh.alpha;
      env.inputs["beta"] = dst_sh.beta;
      env.results = bekw::json_of(d);
      return emit(env, format);
    }

    if (cdst->parsed()) {  // --curve
      const Model nul = dst_vary == "a" ? Model::beta : Model::kumaraswamy;
      if (dst_points < 2) throw bekw::input_error("--points must be at least 2");
      if (!(dst_from > 0.0) || !(dst_to > dst_from))
        throw bekw::input_error("--from/--to must satisfy 0 < from < to");
      if (!(dst_second > 0.0)) throw bekw::input_error("--second must be positive");
      ojson rows = ojson::array();
      for (std::size_t i = 0; i < dst_points; ++i) {
        const double shape =
            dst_from + (dst_to - dst_from) * static_cast<double>(i) /
                           static_cast<double>(dst_points - 1);
        const bekw::PseudoTruePair pt = bekw::pseudo_true(nul, shape, dst_second);
        const bekw::DistanceReport d =
            nul == Model::beta
                ? bekw::distance_report(bekw::BetaParams{shape, dst_second},
                                        bekw::KwParams{pt.target_p1, pt.target_p2})
                : bekw::distance_report(bekw::BetaParams{pt.target_p1, pt.target_p2},
                                        bekw::KwParams{shape, dst_second});
        ojson row;
        row[dst_vary] = shape;
        row["hellinger"] = d.hellinger;
        row["ks"] = d.ks;
        rows.push_back(std::move(row));
      }
      if (format == "csv") {
        std::cout << dst_vary << ",hellinger,ks\n";
        for (const auto& row : rows)
          std::cout << bekw::detail::g17(row[dst_vary].get<double>()) << ','
                    << bekw::detail::g17(row["hellinger"].get<double>()) << ','
                    << bekw::detail::g17(row["ks"].get<double>()) << '\n';
        return 0;
      }
      bekw::ReportEnvelope env;
      env.command = "distance";
      env.inputs["vary"] = dst_vary;
      env.inputs["second"] = dst_second;
      env.inputs["from"] = dst_from;
      env.inputs["to"] = dst_to;
      env.inputs["points"] = dst_points;
      env.results["curve"] = std::move(rows);
      return emit(env, format);
    }

    if (csim->parsed()) {
      const Model nul = parse_model(sim_null);
      const auto [p1, p2] = sim_sh.resolve(nul);
      bekw::McConfig cfg;
      cfg.null_model = nul;
      cfg.p1 = p1;
      cfg.p2 = p2;
      cfg.n = sim_n;
      cfg.reps = sim_reps;
      cfg.master_seed = sim_seed;
      cfg.workers = sim_workers;
      const bekw::McResult r = bekw::simulate_pcs(cfg);
      bekw::ReportEnvelope env;
      env.command = "simulate";
      env.inputs["null"] = bekw::model_name(nul);
      env.inputs.update(sim_sh.echo(nul, p1, p2));
      env.inputs["n"] = sim_n;
      env.inputs["reps"] = sim_reps;
      env.inputs["workers"] = sim_workers;
      env.seed = sim_seed;
      env.results = bekw::json_of(r);
      if (r.failure_warning)
        env.warnings.push_back(
            "more than 1% of replicates failed to fit and were excluded");
      return emit(env, format);
    }

    if (ctab->parsed()) {
      if (o_ob->count() && o_obeta->count())
        throw bekw::input_error("give at most one of --override-b / --override-beta");
      bekw::TableOverrides ov;
      if (o_ob->count()) ov.second_param = tab_ob;
      if (o_obeta->count()) ov.second_param = tab_obeta;
      if (o_tr->count()) ov.reps = tab_reps;
      if (o_ts->count()) ov.seed = tab_seed;
      if (o_tw->count()) ov.workers = tab_workers;
      const bekw::TableResult t = bekw::reproduce_table(tab_which, ov);
      bekw::ReportEnvelope env;
      env.command = "tables";
      env.inputs["which"] = tab_which;
      env.inputs["second_param"] = ov.second_param ? ojson(*ov.second_param) : ojson();
      env.inputs["reps"] = ov.reps ? ojson(*ov.reps) : ojson();
      env.inputs["workers"] = ov.workers ? ojson(*ov.workers) : ojson();
      if (tab_which == 5 || tab_which == 6) env.seed = ov.seed ? *ov.seed : 42;
      env.warnings = t.warnings;
      env.results = bekw::json_of(t);
      if (format == "csv") {
        bekw::table_csv(std::cout, t);
        for (const std::string& w : env.warnings) std::cerr << "warning: " << w << '\n';
        return 0;
      }
      if (format == "json") return emit(env, format);
      bekw::ReportEnvelope hdr = env;
      hdr.results = ojson{{"title", t.title}};
      bekw::render_text(std::cout, hdr);
      std::cout << '\n' << bekw::table_grid(t);
      return 0;
    }
  } catch (const bekw::input_error& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const bekw::convergence_error& e) {
    std::cerr << e.what() << '\n';
    return 3;
  } catch (const bekw::accuracy_error& e) {
    std::cerr << e.what() << '\n';
    return 3;
  }
  return 0;
}
