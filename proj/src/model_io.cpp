#include "atavism/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace atavism {

namespace {

using nlohmann::json;

Eigen::MatrixXd parse_matrix(const json& j, int n, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw ParseError(std::string(what) + " must be an array of " +
                     std::to_string(n) + " rows");
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    const json& row = j[i];
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw ParseError(std::string(what) + " row " + std::to_string(i) +
                       " must have " + std::to_string(n) + " entries");
    for (int k = 0; k < n; ++k) {
      if (!row[k].is_number())
        throw ParseError(std::string(what) + " entries must be numbers");
      m(i, k) = row[k].get<double>();
    }
  }
  return m;
}

MemoryLaw parse_tau(const json& j) {
  if (!j.is_object()) throw ParseError("tau must be an object");
  if (j.contains("finite")) {
    const json& v = j["finite"];
    if (!v.is_array() || v.empty())
      throw ParseError("tau.finite must be a nonempty array");
    std::vector<double> probs;
    probs.reserve(v.size());
    for (const json& x : v) {
      if (!x.is_number()) throw ParseError("tau.finite entries must be numbers");
      probs.push_back(x.get<double>());
    }
    return MemoryLaw::finite(std::move(probs));
  }
  if (j.contains("geometric")) {
    const json& p = j["geometric"];
    if (!p.is_number()) throw ParseError("tau.geometric must be a number");
    return MemoryLaw::geometric(p.get<double>());
  }
  throw ParseError("tau must carry either 'finite' or 'geometric'");
}

OffspringKernel parse_kernel(const json& j, const Eigen::MatrixXd& mean, int n) {
  if (!j.is_object() || !j.contains("family"))
    throw ParseError("kernel must be an object with a 'family'");
  std::string family = j["family"].is_string() ? j["family"].get<std::string>() : "";
  if (family == "poisson") return OffspringKernel::poisson(mean);
  if (family == "deterministic") return OffspringKernel::deterministic(mean);
  if (family == "finite") {
    if (!j.contains("atoms") || !j["atoms"].is_array() ||
        static_cast<int>(j["atoms"].size()) != n)
      throw ParseError("finite kernel needs an 'atoms' array with one row per type");
    std::vector<std::vector<KernelAtom>> atoms(n);
    for (int s = 0; s < n; ++s) {
      const json& row = j["atoms"][s];
      if (!row.is_array() || row.empty())
        throw ParseError("finite kernel atoms rows must be nonempty arrays");
      for (const json& a : row) {
        if (!a.is_object() || !a.contains("counts") || !a.contains("prob"))
          throw ParseError("finite kernel atoms need 'counts' and 'prob'");
        const json& counts = a["counts"];
        if (!counts.is_array() || static_cast<int>(counts.size()) != n)
          throw ParseError("finite kernel atom counts must list every type");
        KernelAtom atom;
        atom.counts.resize(n);
        for (int t = 0; t < n; ++t) {
          if (!counts[t].is_number_integer())
            throw ParseError("finite kernel atom counts must be integers");
          atom.counts(t) = counts[t].get<int>();
        }
        if (!a["prob"].is_number())
          throw ParseError("finite kernel atom prob must be a number");
        atom.prob = a["prob"].get<double>();
        atoms[s].push_back(std::move(atom));
      }
    }
    return OffspringKernel::finite(std::move(atoms));
  }
  throw ParseError("unknown kernel family: " + family);
}

InitialMemoryRule parse_initial(const json& j, const TypeSpace& types) {
  if (!j.is_object()) throw ParseError("initial_memory must be an object");
  if (j.contains("constant")) {
    const json& t = j["constant"];
    if (!t.is_string()) throw ParseError("initial_memory.constant must be a type label");
    return InitialMemoryRule::constant(types.index(t.get<std::string>()));
  }
  if (j.contains("periodic")) {
    const json& w = j["periodic"];
    if (!w.is_array() || w.empty())
      throw ParseError("initial_memory.periodic must be a nonempty array of labels");
    std::vector<int> word;
    word.reserve(w.size());
    for (const json& t : w) {
      if (!t.is_string()) throw ParseError("initial_memory.periodic entries must be labels");
      word.push_back(types.index(t.get<std::string>()));
    }
    return InitialMemoryRule::periodic(std::move(word));
  }
  if (j.contains("iid")) {
    const json& spec = j["iid"];
    if (!spec.is_object() || !spec.contains("probs") || !spec["probs"].is_array())
      throw ParseError("initial_memory.iid needs a 'probs' array");
    std::vector<double> probs;
    for (const json& p : spec["probs"]) {
      if (!p.is_number()) throw ParseError("initial_memory.iid probs must be numbers");
      probs.push_back(p.get<double>());
    }
    std::uint64_t seed = 0;
    if (spec.contains("seed")) {
      if (!spec["seed"].is_number_unsigned() && !spec["seed"].is_number_integer())
        throw ParseError("initial_memory.iid seed must be an integer");
      seed = spec["seed"].get<std::uint64_t>();
    }
    if (static_cast<int>(probs.size()) != types.size())
      throw ParseError("initial_memory.iid probs must list every type");
    return InitialMemoryRule::iid(std::move(probs), seed);
  }
  throw ParseError("initial_memory must carry 'constant', 'periodic', or 'iid'");
}

}  // namespace

ModelSpec model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("model file must hold a JSON object");

  if (!j.contains("types") || !j["types"].is_array() || j["types"].empty())
    throw ParseError("model needs a nonempty 'types' array");
  std::vector<std::string> labels;
  for (const json& t : j["types"]) {
    if (!t.is_string()) throw ParseError("'types' entries must be strings");
    labels.push_back(t.get<std::string>());
  }
  TypeSpace types(std::move(labels));
  const int n = types.size();

  if (!j.contains("tau")) throw ParseError("model needs a 'tau' memory law");
  MemoryLaw tau = parse_tau(j["tau"]);

  std::optional<OffspringKernel> kernel;
  Eigen::MatrixXd mean;
  if (j.contains("mean")) mean = parse_matrix(j["mean"], n, "mean");
  if (j.contains("kernel")) {
    // The finite family carries its own mean; the others reuse the matrix.
    if (!j.contains("mean")) {
      if (j["kernel"].is_object() && j["kernel"].value("family", "") == "finite") {
        kernel = parse_kernel(j["kernel"], Eigen::MatrixXd::Zero(n, n), n);
        mean = mean_from_kernel(*kernel);
      } else {
        throw ParseError("kernel families other than 'finite' need an explicit 'mean'");
      }
    } else {
      kernel = parse_kernel(j["kernel"], mean, n);
    }
  } else if (!j.contains("mean")) {
    throw ParseError("model needs a 'mean' matrix or a finite kernel");
  }

  InitialMemoryRule init = j.contains("initial_memory")
                               ? parse_initial(j["initial_memory"], types)
                               : InitialMemoryRule::constant(0);

  return ModelSpec{std::move(types), std::move(mean), std::move(kernel),
                   std::move(tau), std::move(init)};
}

ModelSpec load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading model file: " + path);
  return model_from_json(buf.str());
}

}  // namespace atavism
