#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "fms/cli.hpp"
#include "fms/dynamics.hpp"
#include "fms/graph.hpp"
#include "fms/measures.hpp"
#include "fms/partition.hpp"
#include "fms/system_io.hpp"

namespace py = pybind11;
using namespace fms;

namespace {

py::object fraction(const Rational& r) {
  static py::object cls = py::module_::import("fractions").attr("Fraction");
  return cls(to_string(r));
}

py::list fractions(const std::vector<Rational>& v) {
  py::list out;
  for (const Rational& r : v) out.append(fraction(r));
  return out;
}

// Accepts int, Fraction, decimal, or "irr:<decimal>" strings.
Point to_point(const py::handle& x) { return parse_point(py::str(x).cast<std::string>()); }

Word to_word(const std::vector<std::size_t>& w) { return Word(w.begin(), w.end()); }

py::tuple word_tuple(const Word& w) {
  py::tuple t(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) t[k] = w[k];
  return t;
}

PartitionParams partition_params(std::optional<std::uint64_t> seed) {
  PartitionParams p;
  p.run_statistical = seed.has_value();
  p.xi.seed = seed.value_or(0);
  return p;
}

LabeledChain chain_of(const SystemSpec& spec) {
  return spec.is_rationality_predicate() ? tag_chain(spec)
                                         : extract_symbolic_chain(spec, refine_markov_partition(spec));
}

py::dict certificate_dict(const SystemSpec& spec, const PairCertificate& p) {
  py::dict d;
  d["pair"] = py::make_tuple(p.i, p.j);
  d["kind"] = std::string(to_string(p.certificate.kind));
  d["equivalent"] = p.certificate.equivalent;
  d["exact"] = p.certificate.exact;
  d["word"] = p.certificate.word ? py::object(word_tuple(*p.certificate.word)) : py::none();
  d["mass_i"] = fraction(p.certificate.mass_i);
  d["mass_j"] = fraction(p.certificate.mass_j);
  d["summary"] = p.certificate.summary(spec);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Random dynamical systems with place-dependent probabilities";
  py::register_exception<Error>(m, "FmsError", PyExc_ValueError);

  py::class_<SystemSpec>(m, "System")
      .def_static("from_file", [](const std::string& path) { return load_system(path); })
      .def_static("from_text", [](const std::string& text) { return parse_system(text); })
      .def_property_readonly("edges",
                             [](const SystemSpec& s) {
                               std::vector<std::string> ids;
                               for (const Edge& e : s.edges) ids.push_back(e.id);
                               return ids;
                             })
      .def("format", &format_system)
      .def("apply_map", [](const SystemSpec& s, EdgeIndex e,
                           const py::object& x) { return to_string(apply_map(s, e, to_point(x))); })
      .def("prob", [](const SystemSpec& s, EdgeIndex e,
                      const py::object& x) { return fraction(prob(s, e, to_point(x))); })
      .def("markov_operator",
           [](const SystemSpec& s, const std::string& f, const py::object& x) {
             return fraction(markov_operator(s, TestFunction::parse(f), to_point(x)));
           })
      .def("__repr__", [](const SystemSpec& s) {
        return "<System with " + std::to_string(s.num_edges()) + " edges>";
      });

  m.def("validate", [](const SystemSpec& spec) {
    const ValidationReport rep = validate_system(spec);
    py::list cells, issues;
    for (const CellSum& c : rep.cells) {
      cells.append(py::make_tuple(to_string(c.cell), c.irrational, fraction(c.sum)));
    }
    for (const ValidationIssue& i : rep.issues) {
      issues.append(py::make_tuple(std::string(error_name(i.code)), i.message));
    }
    py::dict d;
    d["ok"] = rep.ok();
    d["cells"] = cells;
    d["issues"] = issues;
    return d;
  });

  m.def("cylinder_measure", [](const SystemSpec& spec, const py::object& x,
                               const std::vector<std::size_t>& w) {
    return fraction(cylinder_measure(spec, to_point(x), to_word(w)));
  });
  m.def(
      "enumerate_cylinders",
      [](const SystemSpec& spec, const py::object& x, std::size_t depth, bool omit_zero) {
        py::list out;
        for (const CylinderMass& c : enumerate_cylinders(spec, to_point(x), depth, omit_zero)) {
          out.append(py::make_tuple(word_tuple(c.word), fraction(c.mass)));
        }
        return out;
      },
      py::arg("spec"), py::arg("x"), py::arg("depth"), py::arg("omit_zero") = true);
  m.def("likelihood_ratio", [](const SystemSpec& spec, const py::object& x, const py::object& y,
                               const std::vector<std::size_t>& w) -> py::object {
    const ExtendedRatio r = likelihood_ratio(spec, to_point(x), to_point(y), to_word(w));
    if (r.infinite) return py::float_(std::numeric_limits<double>::infinity());
    return fraction(r.value);
  });
  m.def("martingale_discrepancy", [](const SystemSpec& spec, const py::object& x,
                                     const py::object& y, std::size_t mm, std::size_t n) {
    return fraction(martingale_discrepancy(spec, to_point(x), to_point(y), mm, n));
  });
  m.def("tail_mass", [](const SystemSpec& spec, const py::object& x, const py::object& y,
                        std::size_t n, const py::object& M) {
    return fraction(tail_mass_exact(spec, to_point(x), to_point(y), n,
                                    parse_rational(py::str(M).cast<std::string>())));
  });
  m.def(
      "xi_estimate",
      [](const SystemSpec& spec, const py::object& x, const py::object& y, std::uint64_t seed,
         std::size_t n_exact, std::size_t n_mc, std::size_t num_samples, double drift_z,
         unsigned threads) {
        XiParams p;
        p.seed = seed;
        p.n_exact = n_exact;
        p.n_mc = n_mc;
        p.num_samples = num_samples;
        p.drift_z = drift_z;
        p.threads = threads;
        const Point px = to_point(x);
        const Point py_ = to_point(y);
        XiReport rep;
        {
          py::gil_scoped_release release;
          rep = xi_estimate(spec, px, py_, p);
        }
        py::dict d;
        d["verdict"] = std::string(to_string(rep.verdict));
        d["drift"] = rep.drift_x.drift;
        d["stderr"] = rep.drift_x.std_error;
        d["z"] = rep.drift_x.z;
        d["infinite_branch"] = rep.infinite_branch;
        d["separating_word"] =
            rep.separating_word ? py::object(word_tuple(*rep.separating_word)) : py::none();
        d["samples"] = rep.samples;
        d["seed"] = rep.seed;
        d["csv"] = to_csv(rep);
        return d;
      },
      py::arg("spec"), py::arg("x"), py::arg("y"), py::arg("seed"), py::arg("n_exact") = 10,
      py::arg("n_mc") = 2000, py::arg("num_samples") = 4000, py::arg("drift_z") = 4.0,
      py::arg("threads") = 1);

  py::class_<FundamentalPartition>(m, "FundamentalPartition")
      .def_property_readonly("num_classes", &FundamentalPartition::num_classes)
      .def_property_readonly("exact", &FundamentalPartition::exact)
      .def_property_readonly("tag_partition",
                             [](const FundamentalPartition& f) { return f.tag_partition; })
      .def_property_readonly("class_names",
                             [](const FundamentalPartition& f) {
                               std::vector<std::string> names;
                               for (std::size_t k = 0; k < f.num_classes(); ++k) {
                                 names.push_back(f.class_name(k));
                               }
                               return names;
                             })
      .def_property_readonly("cut_points",
                             [](const FundamentalPartition& f) {
                               return fractions(f.partition.cut_points);
                             })
      .def_property_readonly("state_names",
                             [](const FundamentalPartition& f) { return f.chain.state_names; })
      .def_property_readonly("edges",
                             [](const FundamentalPartition& f) {
                               py::list out;
                               for (const FmsEdge& e : f.edges) {
                                 out.append(py::make_tuple(e.source, e.label, e.target));
                               }
                               return out;
                             })
      .def("classify", [](const FundamentalPartition& f,
                          const py::object& x) { return classify_point(f, to_point(x)); });

  m.def(
      "fundamental_partition",
      [](const SystemSpec& spec, std::optional<std::uint64_t> seed) {
        py::gil_scoped_release release;
        return fundamental_partition(spec, partition_params(seed));
      },
      py::arg("spec"), py::arg("seed") = py::none());
  m.def("certificates", [](const SystemSpec& spec, const FundamentalPartition& fp) {
    py::list out;
    for (const PairCertificate& p : fp.certificates) out.append(certificate_dict(spec, p));
    return out;
  });
  m.def("partition_report", &format_report);
  m.def("lift_check", [](const SystemSpec& spec, const FundamentalPartition& fp,
                         const py::object& x, std::size_t n) {
    return fraction(lift_check(spec, fp, to_point(x), n));
  });
  m.def("fms_markov_operator", [](const SystemSpec& spec, const FundamentalPartition& fp,
                                  const std::string& f, const py::object& x) {
    return fraction(fms_markov_operator(spec, fp, TestFunction::parse(f), to_point(x)));
  });

  m.def("graph_flags", [](const FundamentalPartition& fp) {
    const Digraph g = fms_graph(fp);
    py::dict d;
    d["irreducible"] = is_irreducible(g);
    d["aperiodic"] = is_aperiodic(g);
    d["recurrent"] = is_recurrent(g);
    d["terminal_components"] = terminal_components(g);
    return d;
  });
  m.def("stationary", [](const FundamentalPartition& fp) {
    const StationaryResult st = stationary_distribution(fp.chain);
    py::dict d;
    d["method"] = std::string(to_string(st.method));
    d["unique"] = st.unique;
    d["state_pi"] = fractions(st.pi);
    std::vector<Rational> class_pi(fp.num_classes(), Rational(0));
    for (std::size_t s = 0; s < st.pi.size(); ++s) class_pi[fp.class_of_state[s]] += st.pi[s];
    d["class_pi"] = fractions(class_pi);
    d["residual"] = fraction(st.exact_residual);
    const MomentResult mom = exact_first_moment(fp.chain, st.pi);
    d["mean"] = fraction(mom.mean);
    d["state_moments"] = fractions(mom.class_moments);
    return d;
  });

  m.def(
      "simulate",
      [](const SystemSpec& spec, const py::object& x0, std::size_t steps, std::uint64_t seed) {
        const Point start = to_point(x0);
        Trace t;
        {
          py::gil_scoped_release release;
          t = simulate(spec, start, steps, seed);
        }
        return t;
      },
      py::arg("spec"), py::arg("x0"), py::arg("steps"), py::arg("seed"));
  py::class_<Trace>(m, "Trace")
      .def_property_readonly("labels", [](const Trace& t) { return t.labels; })
      .def_property_readonly("points",
                             [](const Trace& t) {
                               std::vector<double> v;
                               for (const OrbitPoint& p : t.points) {
                                 v.push_back(static_cast<double>(p.approx()));
                               }
                               return v;
                             })
      .def("average",
           [](const Trace& t, const std::string& f) -> py::object {
             const ErgodicAverage a = ergodic_average(t, TestFunction::parse(f));
             if (a.exact) return fraction(*a.exact);
             return py::float_(a.value);
           })
      .def("class_frequencies", &class_frequencies)
      .def("__len__", &Trace::steps);

  m.def(
      "contraction_estimate",
      [](const SystemSpec& spec, std::uint64_t seed, std::size_t num_pairs) {
        return fraction(contraction_estimate(spec, chain_of(spec), num_pairs, seed).rate);
      },
      py::arg("spec"), py::arg("seed"), py::arg("num_pairs") = 64);
  m.def("w1_distance", &w1_distance);
  m.def(
      "convergence_rate",
      [](const SystemSpec& spec, const py::object& x0, std::uint64_t seed, std::size_t cloud,
         std::size_t n_max, std::size_t burn_in, double bound, double slack) {
        const Point start = to_point(x0);
        RateOptions opts;
        opts.n_max = n_max;
        opts.bound = bound;
        opts.slack = slack;
        RateReport rep;
        {
          py::gil_scoped_release release;
          const auto ref = stationary_cloud(spec, start, cloud, burn_in, seed);
          rep = convergence_rate(spec, std::vector<Point>(cloud, start), ref, seed, opts);
        }
        py::dict d;
        d["distances"] = rep.distances;
        d["ratios"] = rep.ratios;
        d["noise_floor"] = rep.noise_floor;
        d["geometric_mean_ratio"] = rep.geometric_mean_ratio;
        d["ratio_count"] = rep.ratio_count;
        d["within_bound"] = rep.within_bound();
        return d;
      },
      py::arg("spec"), py::arg("x0"), py::arg("seed"), py::arg("cloud") = 4000,
      py::arg("n_max") = 30, py::arg("burn_in") = 100, py::arg("bound") = 1.0,
      py::arg("slack") = 0.1);

  m.def(
      "run",
      [](const std::string& subcommand, const std::string& system_path,
         std::optional<std::uint64_t> seed, const std::string& out_dir, bool json) {
        RunConfig cfg;
        cfg.subcommand = subcommand;
        cfg.system_path = system_path;
        cfg.seed = seed;
        cfg.out_dir = out_dir;
        cfg.json = json;
        std::ostringstream out, err;
        const int status = run(cfg, out, err);
        return py::make_tuple(status, out.str(), err.str());
      },
      py::arg("subcommand"), py::arg("system_path"), py::arg("seed") = py::none(),
      py::arg("out_dir") = "", py::arg("json") = false);
}
