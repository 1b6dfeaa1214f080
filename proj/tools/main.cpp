// Command-line front end: spectral reports, lifted-operator inspection,
// radius enclosures, biased-chain and coupling runs, population simulation,
// and two-point memory-law sweeps. JSON reports carry the model hash and
// seed so every output can be traced back to its inputs; file writes go
// through a temp-file rename so partial outputs never appear under the
// final name.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "atavism/chain.hpp"
#include "atavism/errors.hpp"
#include "atavism/lifted.hpp"
#include "atavism/model.hpp"
#include "atavism/model_io.hpp"
#include "atavism/population.hpp"
#include "atavism/rng.hpp"
#include "atavism/spectral.hpp"

namespace {

using nlohmann::json;

// Exit codes, one per error category.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;       // CLI or model parse problems
constexpr int kExitValidation = 3;
constexpr int kExitBudget = 4;
constexpr int kExitIo = 5;
constexpr int kExitConvergence = 6;

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw atavism::IoError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw atavism::IoError("failed reading file: " + path);
  return buf.str();
}

// Writes content to path via a temporary sibling plus rename; empty path
// means stdout.
void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw atavism::IoError("cannot open output file: " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw atavism::IoError("failed writing output file: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw atavism::IoError("cannot move output into place: " + ec.message());
  }
}

// Numbers in CSV cells: 6 significant digits.
std::string fmt6(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += "\"";
  return out;
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

// Shared context: model plus provenance.
struct Loaded {
  atavism::ModelSpec model;
  std::string hash;
};

Loaded load(const std::string& path) {
  std::string text = read_file(path);
  return Loaded{atavism::model_from_json(text), hash_hex(fnv1a(text))};
}

// Two-point memory law (mass u on the parent, 1-u on the grandparent).
atavism::MemoryLaw two_point_law(double u) {
  return atavism::MemoryLaw::finite({u, 1.0 - u});
}

std::string prefix_label(const atavism::Prefix& p, const atavism::TypeSpace& types) {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += '.';
    out += types.label(p[i]);
  }
  return out;
}

// ------------------------------------------------------------- subcommands

int cmd_spectral(const std::string& model_path, const std::string& out_path,
                 double tol) {
  Loaded in = load(model_path);
  atavism::require_valid(in.model);
  atavism::PFTriple pf = atavism::perron_frobenius(in.model.mean, tol);
  auto [lo, hi] = atavism::harnack_enclosure(pf);

  json rep;
  rep["command"] = "spectral";
  rep["model_hash"] = in.hash;
  rep["tol"] = tol;
  rep["r"] = pf.r;
  rep["rho"] = vector_json(pf.rho);
  rep["h"] = vector_json(pf.h);
  rep["normalized"] = matrix_json(atavism::normalized(in.model.mean, pf));
  rep["harnack"] = json::array({lo, hi});
  write_output(out_path, rep.dump(2) + "\n");
  return kExitOk;
}

int cmd_lift(const std::string& model_path, const std::string& out_path,
             int depth, double u, bool has_u, std::int64_t max_states) {
  Loaded in = load(model_path);
  if (has_u) in.model.tau = two_point_law(u);
  atavism::require_valid(in.model);

  atavism::LiftOptions opts;
  opts.max_states = max_states;
  atavism::LiftedOperator op(in.model.mean, in.model.tau, depth, opts);
  Eigen::MatrixXd dense = op.dense();

  std::ostringstream csv;
  csv << "prefix";
  for (std::int64_t c = 0; c < op.size(); ++c)
    csv << ","
        << csv_quote(prefix_label(
               atavism::index_to_prefix(c, op.num_types(), depth), in.model.types));
  csv << "\n";
  for (std::int64_t r = 0; r < op.size(); ++r) {
    csv << csv_quote(prefix_label(atavism::index_to_prefix(r, op.num_types(), depth),
                                  in.model.types));
    for (std::int64_t c = 0; c < op.size(); ++c) csv << "," << fmt6(dense(r, c));
    csv << "\n";
  }
  write_output(out_path, csv.str());
  return kExitOk;
}

int cmd_radius(const std::string& model_path, const std::string& out_path,
               int max_depth, double tol, double u, bool has_u,
               std::int64_t max_states) {
  Loaded in = load(model_path);
  if (has_u) in.model.tau = two_point_law(u);
  atavism::require_valid(in.model);

  atavism::ConvergeOptions opts;
  opts.tol = tol;
  opts.max_depth = max_depth;
  opts.max_states = max_states;
  atavism::RadiusEnclosure enc =
      atavism::converge_radius(in.model.mean, in.model.tau, opts);

  json rep;
  rep["command"] = "radius";
  rep["model_hash"] = in.hash;
  rep["tol"] = tol;
  rep["max_depth"] = max_depth;
  rep["lower"] = enc.lower;
  rep["upper"] = enc.upper;
  rep["harnack_upper"] = enc.harnack_upper;
  rep["perturbation_upper"] = enc.perturbation_upper;
  rep["exact"] = enc.exact;
  rep["converged"] = enc.converged;
  rep["depth"] = enc.depth;
  json trace = json::array();
  for (const auto& t : enc.trace) {
    json row;
    row["depth"] = t.depth;
    row["value"] = t.value;
    row["lower"] = t.lower;
    row["upper"] = t.upper;
    trace.push_back(row);
  }
  rep["trace"] = trace;
  write_output(out_path, rep.dump(2) + "\n");
  return kExitOk;
}

int cmd_chain(const std::string& model_path, const std::string& out_path,
              std::uint64_t seed, std::int64_t steps, std::int64_t record_every,
              double tol) {
  Loaded in = load(model_path);
  atavism::require_valid(in.model);
  atavism::PFTriple pf = atavism::perron_frobenius(in.model.mean, tol);
  atavism::BiasedKernel kernel(in.model.mean, pf, in.model.tau);

  if (record_every <= 0) record_every = std::max<std::int64_t>(1, steps / 1000);
  atavism::SplitMix64 rng(seed);
  atavism::ChainState state(in.model.initial_memory);

  std::ostringstream csv;
  csv << "step,activated,current,birkhoff_mean\n";
  double birkhoff = 0;
  for (std::int64_t i = 1; i <= steps; ++i) {
    atavism::StepRecord rec = atavism::step(state, kernel, rng);
    birkhoff += kernel.log_h(rec.activated) - kernel.log_h(rec.current);
    if (i % record_every == 0 || i == steps) {
      csv << i << "," << csv_quote(in.model.types.label(rec.activated)) << ","
          << csv_quote(in.model.types.label(rec.current)) << ","
          << fmt6(birkhoff / i) << "\n";
    }
  }
  write_output(out_path, csv.str());
  return kExitOk;
}

int cmd_couple(const std::string& model_path, const std::string& out_path,
               std::uint64_t seed, std::int64_t steps, std::int64_t replicates,
               const std::string& start_a, const std::string& start_b, double tol) {
  Loaded in = load(model_path);
  atavism::require_valid(in.model);
  atavism::PFTriple pf = atavism::perron_frobenius(in.model.mean, tol);
  atavism::BiasedKernel kernel(in.model.mean, pf, in.model.tau);

  atavism::InitialMemoryRule init_a =
      start_a.empty() ? in.model.initial_memory
                      : atavism::InitialMemoryRule::constant(in.model.types.index(start_a));
  atavism::InitialMemoryRule init_b =
      start_b.empty() ? in.model.initial_memory
                      : atavism::InitialMemoryRule::constant(in.model.types.index(start_b));

  std::ostringstream csv;
  csv << "replicate,steps,failures,last_failure,merge_step,final_common_prefix\n";
  std::int64_t total_failures = 0, merged = 0;
  for (std::int64_t rep = 0; rep < replicates; ++rep) {
    atavism::SplitMix64 rng =
        atavism::SplitMix64::stream(seed, static_cast<std::uint64_t>(rep));
    atavism::CouplingStats st = atavism::coupled_run(
        kernel, atavism::ChainState(init_a), atavism::ChainState(init_b), steps, rng);
    total_failures += st.failures;
    if (st.merge_step >= 0) ++merged;
    csv << rep << "," << st.steps << "," << st.failures << "," << st.last_failure
        << "," << st.merge_step << "," << st.final_common_prefix << "\n";
  }
  write_output(out_path, csv.str());

  atavism::ConsolidationBound bound = atavism::consolidation_bound(in.model.tau);
  json summary;
  summary["command"] = "couple";
  summary["model_hash"] = in.hash;
  summary["seed"] = seed;
  summary["replicates"] = replicates;
  summary["total_failures"] = total_failures;
  summary["merged_fraction"] =
      replicates > 0 ? static_cast<double>(merged) / replicates : 0.0;
  summary["consolidation_product"] = bound.product;
  summary["consolidation_tail_factor"] = bound.tail_factor;
  if (!out_path.empty()) std::cout << summary.dump() << "\n";
  return kExitOk;
}

int cmd_simulate(const std::string& model_path, const std::string& out_path,
                 std::uint64_t seed, int k, std::int64_t replicates,
                 std::int64_t cap, const std::string& start) {
  Loaded in = load(model_path);
  atavism::require_valid(in.model);

  int start_type = start.empty() ? 0 : in.model.types.index(start);
  atavism::Generation founders;
  founders.members.push_back(atavism::make_founder(start_type));

  std::ostringstream csv;
  csv << "run,generation,size";
  for (int t = 0; t < in.model.types.size(); ++t)
    csv << "," << csv_quote("count_" + in.model.types.label(t));
  csv << ",extinct,truncated\n";
  for (std::int64_t rep = 0; rep < replicates; ++rep) {
    atavism::SplitMix64 stream =
        atavism::SplitMix64::stream(seed, static_cast<std::uint64_t>(rep));
    atavism::RunStats rs = atavism::simulate(in.model, founders, k, cap, stream());
    for (std::size_t g = 0; g < rs.sizes.size(); ++g) {
      csv << rep << "," << g << "," << rs.sizes[g];
      for (int t = 0; t < in.model.types.size(); ++t)
        csv << "," << rs.type_counts[g][t];
      csv << "," << (rs.extinct ? 1 : 0) << "," << (rs.truncated ? 1 : 0) << "\n";
    }
  }
  write_output(out_path, csv.str());
  return kExitOk;
}

int cmd_sweep(const std::string& model_path, const std::string& out_path,
              const std::string& grid_spec, int depth, double tol,
              std::int64_t max_states) {
  Loaded in = load(model_path);
  // The base model must be sound; the sweep substitutes the memory law.
  {
    atavism::ModelSpec probe = in.model;
    probe.tau = two_point_law(0.5);
    atavism::require_valid(probe);
  }

  double a = 0, b = 0;
  std::int64_t n = 0;
  if (std::sscanf(grid_spec.c_str(), "%lf:%lf:%" SCNd64, &a, &b, &n) != 3 ||
      n < 1 || !(b >= a) || !(a >= 0) || !(b <= 1))
    throw atavism::ParseError("u-grid must be a:b:n with 0 <= a <= b <= 1, n >= 1");

  atavism::LiftOptions opts;
  opts.max_states = max_states;

  std::ostringstream csv;
  csv << "u,radius,lower,upper,valid\n";
  for (std::int64_t i = 0; i < n; ++i) {
    double u = n == 1 ? a : a + (b - a) * static_cast<double>(i) / (n - 1);
    atavism::LiftedOperator op(in.model.mean, two_point_law(u), depth, opts);
    atavism::RadiusResult r = atavism::radius(op, tol);
    // tau(0) = 0 fails validation; the radius is still well defined and
    // emitted, flagged so downstream consumers can filter.
    bool valid = u > 0;
    csv << fmt6(u) << "," << fmt6(r.value) << "," << fmt6(r.lower) << ","
        << fmt6(r.upper) << "," << (valid ? 1 : 0) << "\n";
  }
  write_output(out_path, csv.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Growth of populations with ancestral memory: spectral data, "
               "memory-lifted radius enclosures, biased chains, couplings, "
               "and forward simulation"};
  app.require_subcommand(1);

  // Shared option storage; each subcommand binds the subset it uses.
  std::string model_path, out_path, grid_spec, start, start_a, start_b;
  std::uint64_t seed = 0;
  std::int64_t steps = 1000, replicates = 1, cap = 1000000, record_every = 0;
  std::int64_t max_states = atavism::kDefaultMaxStates;
  int depth = 2, k = 10;
  double tol = 1e-10, u = 0.5;

  auto add_model = [&](CLI::App* cmd) {
    cmd->add_option("--model", model_path, "model JSON file")->required();
    cmd->add_option("--out", out_path, "output path (default: stdout)");
    cmd->add_option("--max-states", max_states, "lifted state budget");
  };

  CLI::App* spectral = app.add_subcommand("spectral", "Perron data of the mean matrix");
  add_model(spectral);
  spectral->add_option("--tol", tol, "certification tolerance");

  CLI::App* lift = app.add_subcommand("lift", "dense lifted operator as CSV");
  add_model(lift);
  lift->add_option("--depth", depth, "truncation depth")->required();
  CLI::Option* lift_u = lift->add_option("--u", u, "two-point memory law override");

  CLI::App* radius = app.add_subcommand("radius", "radius enclosure by increasing depth");
  add_model(radius);
  radius->add_option("--depth", depth, "maximum truncation depth")->capture_default_str();
  double radius_tol = 1e-6;
  radius->add_option("--tol", radius_tol, "successive-difference stop")->capture_default_str();
  CLI::Option* radius_u = radius->add_option("--u", u, "two-point memory law override");

  CLI::App* chain = app.add_subcommand("chain", "biased memory chain trace CSV");
  add_model(chain);
  chain->add_option("--seed", seed, "RNG seed")->required();
  chain->add_option("--steps", steps, "chain steps")->capture_default_str();
  chain->add_option("--record-every", record_every,
                    "row cadence (default: steps/1000)");

  CLI::App* couple = app.add_subcommand("couple", "coupled chain replicates CSV");
  add_model(couple);
  couple->add_option("--seed", seed, "RNG seed")->required();
  couple->add_option("--steps", steps, "steps per replicate")->capture_default_str();
  couple->add_option("--replicates", replicates, "replicates")->capture_default_str();
  couple->add_option("--start-a", start_a, "constant initial memory for the first chain");
  couple->add_option("--start-b", start_b, "constant initial memory for the second chain");

  CLI::App* simulate = app.add_subcommand("simulate", "population run CSV");
  add_model(simulate);
  simulate->add_option("--seed", seed, "RNG seed")->required();
  simulate->add_option("--k", k, "generations")->capture_default_str();
  simulate->add_option("--replicates", replicates, "independent runs")->capture_default_str();
  simulate->add_option("--cap", cap, "population cap")->capture_default_str();
  simulate->add_option("--start", start, "founder type label (default: first type)");

  CLI::App* sweep = app.add_subcommand("sweep", "two-point memory law radius curve CSV");
  add_model(sweep);
  sweep->add_option("--u-grid", grid_spec, "grid a:b:n (n points from a to b)")->required();
  sweep->add_option("--depth", depth, "truncation depth")->capture_default_str();
  double sweep_tol = 1e-8;
  sweep->add_option("--tol", sweep_tol, "certification tolerance")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success))
      return app.exit(e);
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (spectral->parsed()) return cmd_spectral(model_path, out_path, tol);
    if (lift->parsed())
      return cmd_lift(model_path, out_path, depth, u, !lift_u->empty(), max_states);
    if (radius->parsed())
      return cmd_radius(model_path, out_path, depth, radius_tol, u,
                        !radius_u->empty(), max_states);
    if (chain->parsed())
      return cmd_chain(model_path, out_path, seed, steps, record_every, 1e-10);
    if (couple->parsed())
      return cmd_couple(model_path, out_path, seed, steps, replicates, start_a,
                        start_b, 1e-10);
    if (simulate->parsed())
      return cmd_simulate(model_path, out_path, seed, k, replicates, cap, start);
    if (sweep->parsed())
      return cmd_sweep(model_path, out_path, grid_spec, depth, sweep_tol, max_states);
  } catch (const atavism::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const atavism::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const atavism::BudgetError& e) {
    std::cerr << "budget error: " << e.what() << "\n";
    return kExitBudget;
  } catch (const atavism::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const atavism::ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << " (bracket [" << e.lower
              << ", " << e.upper << "])\n";
    return kExitConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
