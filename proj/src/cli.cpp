#include "fms/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fms/dynamics.hpp"
#include "fms/graph.hpp"
#include "fms/partition.hpp"
#include "fms/system_io.hpp"
#include "json.hpp"

namespace fms {

namespace {

using Json = nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class Output {
 public:
  Output(const RunConfig& config, std::ostream& out) : config_(config), out_(out) {
    if (!config.out_dir.empty()) std::filesystem::create_directories(config.out_dir);
  }

  void file(const std::string& name, const std::string& content) const {
    if (config_.out_dir.empty()) return;
    std::ofstream f(std::filesystem::path(config_.out_dir) / name, std::ios::binary);
    if (!f) throw Error(ErrorCode::kInvalidArgument, "cannot write " + name);
    f << content;
  }

  // Text report to stdout (unless --json) and to <stem>.txt.
  void report(const std::string& stem, const std::string& text, const Json& json) const {
    const std::string dumped = json.dump(2) + "\n";
    out_ << (config_.json ? dumped : text);
    file(stem + ".txt", text);
    if (config_.json) file(stem + ".json", dumped);
  }

 private:
  const RunConfig& config_;
  std::ostream& out_;
};

Json word_json(const SystemSpec& spec, const Word& w) {
  Json arr = Json::array();
  for (EdgeIndex e : w) arr.push_back(spec.edges[e].id);
  return arr;
}

std::uint64_t require_seed(const RunConfig& config) {
  if (!config.seed) {
    throw Error(ErrorCode::kMissingSeed, config.subcommand + " is stochastic and needs --seed");
  }
  return *config.seed;
}

XiParams xi_params(const RunConfig& config) {
  XiParams p;
  p.n_exact = config.n_exact;
  p.n_mc = config.n_mc;
  p.num_samples = config.num_samples;
  p.drift_z = config.drift_z;
  p.threads = config.threads;
  p.budget = config.word_budget;
  p.seed = config.seed.value_or(0);
  if (p.num_samples > config.max_samples) {
    throw Error(ErrorCode::kBudgetExceeded, "samples " + std::to_string(p.num_samples) +
                                                " exceed the cap " +
                                                std::to_string(config.max_samples));
  }
  return p;
}

FundamentalPartition build_partition(const SystemSpec& spec, const RunConfig& config) {
  PartitionParams params;
  params.refinement.max_breakpoints = config.max_breakpoints;
  params.xi = xi_params(config);
  params.run_statistical = config.seed.has_value();
  return fundamental_partition(spec, params);
}

LabeledChain base_chain(const SystemSpec& spec, const RunConfig& config) {
  if (!spec.is_piecewise_constant()) return tag_chain(spec);
  RefinementOptions opts;
  opts.max_breakpoints = config.max_breakpoints;
  return extract_symbolic_chain(spec, refine_markov_partition(spec, opts));
}

// Grid of `count` points across the domain; odd ones tagged irrational for
// tag partitions.
std::vector<Point> spot_points(const SystemSpec& spec, const FundamentalPartition& fp,
                               std::size_t count) {
  std::vector<Point> pts;
  const Rational width = spec.domain.hi - spec.domain.lo;
  for (std::size_t k = 0; k < count; ++k) {
    Rational x = spec.domain.lo + width * Rational(static_cast<unsigned long>(k),
                                                   static_cast<unsigned long>(count - 1));
    x.canonicalize();
    if (fp.tag_partition && k % 2 == 1) {
      pts.push_back(Point::irrational_near(to_long_double(x) + 1e-9L));
    } else {
      pts.push_back(Point::exact(x));
    }
  }
  return pts;
}

std::vector<Point> lift_points(const SystemSpec& spec, const FundamentalPartition& fp) {
  std::vector<Point> pts = {Point::exact(spec.domain.lo), Point::exact(spec.domain.hi)};
  for (const Rational& c : fp.partition.cut_points) pts.push_back(Point::exact(c));
  for (const Point& p : fp.chain.point_reps) pts.push_back(p);
  std::vector<Point> unique;
  for (const Point& p : pts) {
    if (std::find(unique.begin(), unique.end(), p) == unique.end()) unique.push_back(p);
  }
  return unique;
}

std::vector<std::size_t> terminal_states(const LabeledChain& chain) {
  const auto comps = terminal_components(support_graph(chain));
  return comps.front();
}

// ---------------------------------------------------------------- subcommands

int cmd_validate(const SystemSpec& spec, const Output& o) {
  const ValidationReport rep = validate_system(spec);
  std::ostringstream text;
  Json j;
  j["cells"] = Json::array();
  text << "cell,tag,sum\n";
  for (const CellSum& c : rep.cells) {
    text << to_string(c.cell) << "," << (c.irrational ? "irrational" : "rational") << ","
         << to_string(c.sum) << "\n";
    j["cells"].push_back({{"cell", to_string(c.cell)},
                          {"tag", c.irrational ? "irrational" : "rational"},
                          {"sum", to_string(c.sum)}});
  }
  j["issues"] = Json::array();
  for (const ValidationIssue& i : rep.issues) {
    text << error_name(i.code) << ": " << i.message << "\n";
    j["issues"].push_back({{"error", std::string(error_name(i.code))}, {"message", i.message}});
  }
  text << "status: " << (rep.ok() ? "OK" : "FAIL") << "\n";
  j["status"] = rep.ok() ? "OK" : "FAIL";
  o.report("validate", text.str(), j);
  return rep.ok() ? kExitOk : kExitValidation;
}

int cmd_cylinders(const SystemSpec& spec, const RunConfig& config, const Output& o) {
  const Point x = parse_point(config.x);
  const auto cyl = enumerate_cylinders(spec, x, config.depth, !config.include_zero,
                                       config.word_budget);
  std::ostringstream text;
  Json j;
  j["x"] = to_string(x);
  j["depth"] = config.depth;
  j["cylinders"] = Json::array();
  text << "word,mass\n";
  Rational total(0);
  for (const CylinderMass& c : cyl) {
    text << "\"" << format_word(spec, c.word) << "\"," << to_string(c.mass) << "\n";
    j["cylinders"].push_back({{"word", word_json(spec, c.word)}, {"mass", to_string(c.mass)}});
    total += c.mass;
  }
  text << "total," << to_string(total) << "\n";
  j["total"] = to_string(total);
  o.report("cylinders", text.str(), j);
  o.file("cylinders.csv", text.str());
  return kExitOk;
}

int cmd_xi(const SystemSpec& spec, const RunConfig& config, const Output& o) {
  require_seed(config);
  if (config.y.empty()) throw Error(ErrorCode::kInvalidArgument, "xi needs --y");
  const Point x = parse_point(config.x);
  const Point y = parse_point(config.y);
  const XiReport rep = xi_estimate(spec, x, y, xi_params(config));
  const std::string csv = to_csv(rep);
  Json j;
  j["x"] = to_string(x);
  j["y"] = to_string(y);
  j["verdict"] = std::string(to_string(rep.verdict));
  j["evidence"] = rep.verdict == XiVerdict::kSingularCertified
                      ? "exact certificate"
                      : "statistical, seed=" + std::to_string(rep.seed);
  j["infinite_branch"] = rep.infinite_branch;
  if (rep.separating_word) j["separating_word"] = word_json(spec, *rep.separating_word);
  for (const auto& [key, d] : {std::pair{"drift_x", &rep.drift_x}, {"drift_y", &rep.drift_y}}) {
    j[key] = {{"drift", d->drift},
              {"stderr", d->std_error},
              {"z", std::isfinite(d->z) ? Json(d->z) : Json(d->z > 0 ? "inf" : "-inf")},
              {"finite_paths", d->finite_paths},
              {"infinite_paths", d->infinite_paths}};
  }
  j["exact_tail_table"] = Json::array();
  for (const TailEntry& t : rep.exact_tail_table) {
    j["exact_tail_table"].push_back(
        {{"n", t.n}, {"M", to_string(t.M)}, {"mass", to_string(t.mass)}});
  }
  j["mc_tail_estimates"] = Json::array();
  for (const auto& [m, v] : rep.mc_tail_estimates) {
    j["mc_tail_estimates"].push_back({{"M", to_string(m)}, {"tail", v}});
  }
  j["samples"] = rep.samples;
  j["seed"] = rep.seed;
  o.report("xi", csv, j);
  o.file("xi.csv", csv);
  return kExitOk;
}

Json certificate_json(const SystemSpec& spec, const MergeCertificate& c) {
  Json j;
  j["kind"] = std::string(to_string(c.kind));
  j["equivalent"] = c.equivalent;
  j["evidence"] = c.exact ? "exact certificate"
                          : (c.xi ? "statistical, seed=" + std::to_string(c.xi->seed)
                                  : "none");
  if (c.word) {
    j["word"] = word_json(spec, *c.word);
    j["mass_i"] = to_string(c.mass_i);
    j["mass_j"] = to_string(c.mass_j);
  }
  if (c.kind == CertificateKind::kMeasureEquality && c.equivalent) {
    j["span_words"] = Json::array();
    for (const Word& w : c.span_words) j["span_words"].push_back(word_json(spec, w));
  }
  if (c.kind == CertificateKind::kCouplingMerge) {
    j["product_states"] = c.product_states;
    j["terminal_diagonal_states"] = c.terminal_diagonal_states;
  }
  if (c.xi) {
    j["verdict"] = std::string(to_string(c.xi->verdict));
    j["drift"] = c.xi->drift_x.drift;
    j["stderr"] = c.xi->drift_x.std_error;
  }
  return j;
}

Json partition_json(const SystemSpec& spec, const FundamentalPartition& fp) {
  Json j;
  j["tag_partition"] = fp.tag_partition;
  j["breakpoints"] = Json::array();
  for (const Rational& c : fp.partition.cut_points) j["breakpoints"].push_back(to_string(c));
  j["closure"] = Json::array();
  for (const Breakpoint& b : fp.partition.closure) {
    Json e = {{"value", to_string(b.value)}, {"origin", std::string(to_string(b.origin))}};
    if (b.edge) {
      e["edge"] = spec.edges[*b.edge].id;
      e["image"] = to_string(*b.image);
    }
    j["closure"].push_back(e);
  }
  j["states"] = fp.chain.state_names;
  j["classes"] = Json::array();
  for (std::size_t k = 0; k < fp.num_classes(); ++k) {
    Json names = Json::array();
    for (std::size_t s : fp.classes[k]) names.push_back(fp.chain.state_names[s]);
    j["classes"].push_back({{"id", k}, {"states", names}});
  }
  j["certificates"] = Json::array();
  for (const PairCertificate& p : fp.certificates) {
    Json c = certificate_json(spec, p.certificate);
    c["i"] = p.i;
    c["j"] = p.j;
    j["certificates"].push_back(c);
  }
  j["edges"] = Json::array();
  for (const FmsEdge& e : fp.edges) {
    j["edges"].push_back({{"source", e.source},
                          {"label", spec.edges[e.label].id},
                          {"target", e.target},
                          {"psi", spec.edges[e.label].id}});
  }
  j["diagnostics"] = fp.diagnostics;
  j["evidence"] = fp.exact() ? "exact certificate" : "statistical";
  return j;
}

std::string matrix_text(const LabeledChain& chain) {
  std::ostringstream out;
  const RationalMatrix m = chain.transition_matrix();
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << "  " << chain.state_names[i] << ":";
    for (const Rational& v : m[i]) out << " " << to_string(v);
    out << "\n";
  }
  return out.str();
}

int cmd_partition(const SystemSpec& spec, const RunConfig& config, const Output& o) {
  const FundamentalPartition fp = build_partition(spec, config);
  std::ostringstream text;
  text << format_report(spec, fp);
  Json j = partition_json(spec, fp);

  const LabeledChain terminal = fp.chain.restricted(terminal_states(fp.chain));
  text << "matrix (terminal component):\n" << matrix_text(terminal);
  j["terminal_matrix"] = Json::array();
  for (const auto& row : terminal.transition_matrix()) {
    Json r = Json::array();
    for (const Rational& v : row) r.push_back(to_string(v));
    j["terminal_matrix"].push_back(r);
  }

  Rational lift_max(0);
  const auto lp = lift_points(spec, fp);
  for (const Point& x : lp) {
    Rational d = lift_check(spec, fp, x, config.lift_depth, config.word_budget);
    if (d > lift_max) lift_max = d;
  }
  text << "lift_check: depth " << config.lift_depth << " points " << lp.size()
       << " max discrepancy " << to_string(lift_max) << "\n";
  j["lift_check"] = {{"depth", config.lift_depth},
                     {"points", lp.size()},
                     {"max_discrepancy", to_string(lift_max)}};

  Rational u_max(0);
  const auto sp = spot_points(spec, fp, 20);
  const std::vector<TestFunction> fs = {TestFunction::constant(1), TestFunction::monomial(1),
                                        TestFunction::monomial(2)};
  for (const Point& x : sp) {
    for (const TestFunction& f : fs) {
      Rational d = abs(fms_markov_operator(spec, fp, f, x) - markov_operator(spec, f, x));
      if (d > u_max) u_max = d;
    }
  }
  text << "u_prime_check: points " << sp.size() << " functions 1,x,x^2 max discrepancy "
       << to_string(u_max) << "\n";
  j["u_prime_check"] = {{"points", sp.size()}, {"max_discrepancy", to_string(u_max)}};

  o.report("partition", text.str(), j);
  o.file("matrix.csv", matrix_csv(fp.chain.transition_matrix(), fp.chain.state_names));
  if (lift_max != 0 || u_max != 0) {
    throw Error(ErrorCode::kInconsistentMerge, "lift or U'=U check failed");
  }
  return kExitOk;
}

int cmd_graph(const SystemSpec& spec, const RunConfig& config, const Output& o) {
  const FundamentalPartition fp = build_partition(spec, config);
  const Digraph g = fms_graph(fp);
  std::ostringstream text;
  Json j;
  auto flags = [&](const Digraph& d, const std::string& label, Json& node) {
    const bool irr = is_irreducible(d);
    const bool ap = is_aperiodic(d);
    const bool rec = is_recurrent(d);
    text << label << ": irreducible " << (irr ? "true" : "false") << ", aperiodic "
         << (ap ? "true" : "false") << ", recurrent " << (rec ? "true" : "false") << "\n";
    node = {{"irreducible", irr}, {"aperiodic", ap}, {"recurrent", rec}};
    return rec;
  };
  text << "vertices: " << g.num_vertices() << " arcs: " << g.arcs.size() << "\n";
  j["vertices"] = g.vertices;
  j["arcs"] = Json::array();
  for (const Arc& a : g.arcs) {
    j["arcs"].push_back({{"source", a.source}, {"target", a.target}, {"label", a.label}});
  }
  flags(g, "full graph", j["full_graph"]);
  const auto terms = terminal_components(g);
  j["terminal_components"] = Json::array();
  bool all_recurrent = true;
  for (std::size_t t = 0; t < terms.size(); ++t) {
    std::string names;
    for (std::size_t v : terms[t]) names += (names.empty() ? "" : ", ") + g.vertices[v];
    Json node;
    const bool rec = flags(induced_subgraph(g, terms[t]), "terminal component {" + names + "}",
                           node);
    all_recurrent = all_recurrent && rec;
    node["vertices"] = terms[t];
    j["terminal_components"].push_back(node);
  }
  const bool unique_terminal = terms.size() == 1;
  text << "recurrence predicate on the terminal component: "
       << (unique_terminal && all_recurrent ? "holds, stability predicted" : "fails") << "\n";
  j["stability_predicted"] = unique_terminal && all_recurrent;

  const StationaryResult st = stationary_distribution(fp.chain);
  text << "stationary: method " << to_string(st.method) << " residual "
       << (st.method == StationaryMethod::kExactSolve ? to_string(st.exact_residual)
                                                       : format_double(st.residual))
       << "\n";
  j["stationary"] = {{"method", std::string(to_string(st.method))},
                     {"unique", st.unique},
                     {"residual", st.method == StationaryMethod::kExactSolve
                                      ? Json(to_string(st.exact_residual))
                                      : Json(st.residual)}};
  if (!st.unique) {
    text << "MultipleTerminalComponents: " << st.terminal_components.size()
         << " terminal components, pi not unique\n";
  }
  // Class weights aggregate the per-state solution.
  std::vector<Rational> class_pi(fp.num_classes(), Rational(0));
  if (st.method == StationaryMethod::kExactSolve) {
    for (std::size_t s = 0; s < fp.chain.num_states(); ++s) class_pi[fp.class_of_state[s]] += st.pi[s];
    Json pis = Json::array();
    for (std::size_t k = 0; k < fp.num_classes(); ++k) {
      text << "  pi(K'" << k << " = " << fp.class_name(k) << ") = " << to_string(class_pi[k])
           << "\n";
      pis.push_back(to_string(class_pi[k]));
    }
    j["stationary"]["class_pi"] = pis;
    Json comps = Json::array();
    for (const auto& c : st.component_pi) {
      Json v = Json::array();
      for (const Rational& p : c) v.push_back(to_string(p));
      comps.push_back(v);
    }
    j["stationary"]["component_pi"] = comps;

    const MomentResult mom = exact_first_moment(fp.chain, st.pi);
    text << "first moment: mean " << to_string(mom.mean) << " invariance residual "
         << to_string(mom.invariance_residual) << "\n";
    Json ms = Json::array();
    for (std::size_t s = 0; s < fp.chain.num_states(); ++s) {
      if (st.pi[s] == 0) continue;
      text << "  m(" << fp.chain.state_names[s] << ") = " << to_string(mom.class_moments[s])
           << "\n";
      ms.push_back({{"state", fp.chain.state_names[s]},
                    {"moment", to_string(mom.class_moments[s])}});
    }
    j["first_moment"] = {{"mean", to_string(mom.mean)},
                         {"invariance_residual", to_string(mom.invariance_residual)},
                         {"per_state", ms}};
  } else {
    Json pis = Json::array();
    for (std::size_t s = 0; s < fp.chain.num_states(); ++s) {
      text << "  pi(" << fp.chain.state_names[s] << ") ~ " << format_double(st.pi_approx[s])
           << "\n";
      pis.push_back(st.pi_approx[s]);
    }
    j["stationary"]["pi_approx"] = pis;
  }

  const LabeledChain terminal = fp.chain.restricted(terminal_states(fp.chain));
  const RationalMatrix tm = terminal.transition_matrix();
  text << "matrix (terminal component):\n" << matrix_text(terminal);
  text << "eigenvalue moduli:";
  Json mods = Json::array();
  for (double m : spectrum_moduli(tm)) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), " %.12g", m);
    text << buf;
    mods.push_back(m);
  }
  text << "\n";
  j["eigenvalue_moduli"] = mods;
  j["evidence"] = fp.exact() ? "exact certificate" : "statistical";
  text << "evidence: " << (fp.exact() ? "exact certificate"
                                      : "statistical, seed=" + std::to_string(config.seed.value_or(0)))
       << "\n";

  o.report("graph", text.str(), j);
  o.file("matrix.csv", matrix_csv(tm, terminal.state_names));
  if (st.method == StationaryMethod::kExactSolve) {
    o.file("stationary.csv", stationary_csv(st, fp.chain.state_names));
  }
  return kExitOk;
}

int cmd_simulate(const SystemSpec& spec, const RunConfig& config, const Output& o) {
  const std::uint64_t seed = require_seed(config);
  if (config.steps > config.max_steps) {
    throw Error(ErrorCode::kBudgetExceeded, "steps exceed the cap " +
                                                std::to_string(config.max_steps));
  }
  const Point x0 = parse_point(config.x0);
  const Trace trace = simulate(spec, x0, config.steps, seed);
  const FundamentalPartition fp = build_partition(spec, config);

  std::ostringstream text;
  std::ostringstream avg_csv;
  Json j;
  j["x0"] = to_string(x0);
  j["steps"] = config.steps;
  j["seed"] = seed;
  text << "x0 " << to_string(x0) << " steps " << config.steps << " seed " << seed << "\n";
  avg_csv << "function,average,precision\n";
  j["averages"] = Json::array();
  for (const std::string& expr : config.functions) {
    const ErgodicAverage a = ergodic_average(trace, TestFunction::parse(expr));
    const std::string value = a.exact ? to_string(*a.exact) : format_double(a.value);
    const char* precision = a.exact ? "exact" : "double";
    text << "average " << expr << " = " << value << " (" << precision << ")\n";
    avg_csv << "\"" << expr << "\"," << value << "," << precision << "\n";
    j["averages"].push_back({{"function", expr}, {"average", value}, {"precision", precision}});
  }
  const auto freq = class_frequencies(trace, fp);
  j["class_frequencies"] = Json::array();
  for (std::size_t k = 0; k < freq.size(); ++k) {
    text << "frequency K'" << k << " = " << fp.class_name(k) << ": " << format_double(freq[k])
         << "\n";
    j["class_frequencies"].push_back({{"class", fp.class_name(k)}, {"frequency", freq[k]}});
  }
  o.report("simulate", text.str(), j);
  o.file("trace.csv", trace_csv(spec, trace));
  o.file("averages.csv", avg_csv.str());
  return kExitOk;
}

int cmd_rate(const SystemSpec& spec, const RunConfig& config, const Output& o) {
  const std::uint64_t seed = require_seed(config);
  if (config.cloud > config.max_samples) {
    throw Error(ErrorCode::kBudgetExceeded, "cloud exceeds the sample cap");
  }
  const Point x0 = parse_point(config.x0);
  const ContractionEstimate ce = contraction_estimate(spec, base_chain(spec, config), 64, seed);
  RateOptions opts;
  opts.n_max = config.n_max;
  opts.slack = config.slack;
  if (config.bound) {
    opts.bound = *config.bound;
  } else {
    Rational level = ce.rate;
    if (config.b) level = std::max(level, parse_rational(*config.b));
    opts.bound = std::sqrt(level.get_d());
  }
  const auto reference = stationary_cloud(spec, x0, config.cloud, config.burn_in, seed);
  const std::vector<Point> start(config.cloud, x0);
  const RateReport rep = convergence_rate(spec, start, reference, seed, opts);
  const std::string csv = rate_csv(rep);
  Json j;
  j["contraction_rate"] = to_string(ce.rate);
  j["distances"] = rep.distances;
  Json ratios = Json::array();
  for (const auto& r : rep.ratios) ratios.push_back(r ? Json(*r) : Json(nullptr));
  j["ratios"] = ratios;
  j["noise_floor"] = rep.noise_floor;
  j["geometric_mean_ratio"] = rep.ratio_count ? Json(rep.geometric_mean_ratio) : Json(nullptr);
  j["bound"] = rep.bound;
  j["within_bound"] = rep.within_bound();
  j["seed"] = seed;
  o.report("rate", csv, j);
  o.file("rate.csv", csv);
  return kExitOk;
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const SystemSpec spec = load_system(config.system_path);
    const Output o(config, out);
    if (config.subcommand == "validate") return cmd_validate(spec, o);
    const ValidationReport rep = validate_system(spec);
    if (!rep.ok()) {
      for (const ValidationIssue& i : rep.issues) {
        err << error_name(i.code) << ": " << i.message << "\n";
      }
      return kExitValidation;
    }
    if (config.subcommand == "cylinders") return cmd_cylinders(spec, config, o);
    if (config.subcommand == "xi") return cmd_xi(spec, config, o);
    if (config.subcommand == "partition") return cmd_partition(spec, config, o);
    if (config.subcommand == "graph") return cmd_graph(spec, config, o);
    if (config.subcommand == "simulate") return cmd_simulate(spec, config, o);
    if (config.subcommand == "rate") return cmd_rate(spec, config, o);
    throw Error(ErrorCode::kInvalidArgument, "unknown subcommand " + config.subcommand);
  } catch (const Error& e) {
    err << e.what() << "\n";
    switch (error_class(e.code())) {
      case ErrorClass::kValidation: return kExitValidation;
      case ErrorClass::kBudget: return kExitBudget;
      case ErrorClass::kInvariant: return kExitInvariant;
    }
  } catch (const std::exception& e) {
    err << "InternalError: " << e.what() << "\n";
  }
  return kExitInvariant;
}

}  // namespace fms
