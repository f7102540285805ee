#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qcap/channel.hpp"
#include "qcap/channels.hpp"
#include "qcap/errors.hpp"
#include "qcap/io.hpp"
#include "qcap/optimizer.hpp"

namespace qcap::cli {

enum ExitCode : int { kSuccess = 0, kInputError = 1, kNumericalFailure = 2 };

struct CliOptions {
  std::optional<std::filesystem::path> input_path;
  std::filesystem::path output_path = "qcap_output.txt";
  std::optional<std::size_t> num_states;    // J
  std::optional<std::size_t> num_outcomes;  // K
  std::optional<std::size_t> num_channels;  // C
  std::optional<std::size_t> num_kraus;     // M
  std::optional<std::size_t> input_dim;     // N
  std::optional<std::size_t> output_dim;    // D
  std::optional<std::string> channel;       // built-in family, e.g. "depolarizing(0.5)"
  double sa_percent = 50.0;
  double tolerance = 1e-10;
  std::optional<double> machine_epsilon;
  int max_iterations = 10000;
  std::optional<std::uint64_t> seed;
  int restarts = 1;
  std::optional<std::filesystem::path> fixed_ensemble_path;
  bool quiet = false;
  bool no_limits = false;
};

// Input problems the driver reports with exit code 1.
class InputError : public Error {
public:
  using Error::Error;
};

struct ChannelSpec {
  std::string family;
  std::optional<double> parameter;
};

// "name", "name(x)" or "name:x".
inline ChannelSpec parse_channel_spec(std::string_view text) {
  ChannelSpec spec;
  auto split = text.find_first_of("(:");
  spec.family = std::string(text.substr(0, split));
  if (split == std::string_view::npos) return spec;
  auto rest = text.substr(split + 1);
  if (text[split] == '(') {
    if (rest.empty() || rest.back() != ')') {
      throw InputError("malformed channel specification '" + std::string(text) + "'");
    }
    rest.remove_suffix(1);
  }
  const auto v = detail::parse_number<double>(detail::trim(rest));
  if (!v) throw InputError("malformed channel parameter in '" + std::string(text) + "'");
  spec.parameter = *v;
  return spec;
}

inline KrausChannel make_builtin_channel(const ChannelSpec& spec, std::size_t input_dim,
                                         std::size_t output_dim, std::size_t num_kraus,
                                         std::uint64_t seed, std::size_t max_dim) {
  auto param = [&spec](const char* what) {
    if (!spec.parameter) throw InputError(spec.family + " needs a parameter (" + what + ")");
    return *spec.parameter;
  };
  auto square = [&] {
    if (input_dim != output_dim) {
      throw InputError(spec.family + " channel needs equal input and output dimensions");
    }
    return input_dim;
  };
  auto qubit = [&] {
    if (square() != 2) throw InputError(spec.family + " channel is defined for qubits only");
  };
  if (spec.family == "identity") return channels::identity(square(), max_dim);
  if (spec.family == "depolarizing") return channels::depolarizing(square(), param("p"), max_dim);
  if (spec.family == "phase-damping") {
    qubit();
    return channels::phase_damping(param("lambda"));
  }
  if (spec.family == "amplitude-damping") {
    qubit();
    return channels::amplitude_damping(param("gamma"));
  }
  if (spec.family == "random") {
    const auto channel_seed = spec.parameter ? static_cast<std::uint64_t>(*spec.parameter) : seed;
    return channels::random(input_dim, output_dim, num_kraus, channel_seed, max_dim);
  }
  throw InputError("unknown channel family '" + spec.family + "'");
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path channel_output_path(const std::filesystem::path& base,
                                                 std::size_t index, std::size_t count) {
  if (count <= 1) return base;
  auto p = base;
  p.replace_filename(base.stem().string() + "_c" + std::to_string(index + 1) +
                     base.extension().string());
  return p;
}

struct Problem {
  std::vector<KrausChannel> channels;
  std::size_t num_states = 0;
  std::size_t num_outcomes = 0;
};

inline Problem load_problem(const CliOptions& o, std::uint64_t seed, std::size_t max_dim) {
  Problem prob;
  if (o.input_path) {
    if (o.channel) throw InputError("--input and --channel are mutually exclusive");
    const auto file = parse_import(read_file(*o.input_path));
    auto check = [](const std::optional<std::size_t>& flag, std::size_t value, const char* name) {
      if (flag && *flag != value) {
        throw InputError(std::string("--") + name + " disagrees with the input file");
      }
    };
    check(o.num_channels, file.num_channels, "channels");
    check(o.num_kraus, file.num_kraus, "kraus");
    check(o.input_dim, file.input_dim, "dim-in");
    check(o.output_dim, file.output_dim, "dim-out");
    for (const auto& ops : file.channels) prob.channels.push_back(validate_channel(ops, max_dim));
    prob.num_states = o.num_states.value_or(file.num_states);
    prob.num_outcomes = o.num_outcomes.value_or(file.num_outcomes);
  } else {
    if (!o.channel) throw InputError("either --input or --channel is required");
    if (!o.num_states || !o.num_outcomes) {
      throw InputError("--states and --outcomes are required with --channel");
    }
    const auto spec = parse_channel_spec(*o.channel);
    const auto n = o.input_dim.value_or(o.output_dim.value_or(2));
    const auto d = o.output_dim.value_or(n);
    const auto m = o.num_kraus.value_or(2);
    const auto c = o.num_channels.value_or(1);
    if (c < 1) throw InputError("--channels must be at least 1");
    for (std::size_t i = 0; i < c; ++i) {
      prob.channels.push_back(make_builtin_channel(spec, n, d, m, seed + i, max_dim));
    }
    prob.num_states = *o.num_states;
    prob.num_outcomes = *o.num_outcomes;
  }
  return prob;
}

inline std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

inline int run(const CliOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const std::size_t max_dim =
        o.no_limits ? std::numeric_limits<std::size_t>::max() : kDefaultSizeLimit;
    const std::uint64_t seed = o.seed.value_or(entropy_seed());
    out << "seed = " << seed << "\n";

    const Problem prob = load_problem(o, seed, max_dim);
    if (prob.num_states < 1 || prob.num_outcomes < 1) {
      throw InputError("J and K must be at least 1");
    }
    if (!o.no_limits && (prob.num_states > kDefaultSizeLimit ||
                         prob.num_outcomes > kDefaultSizeLimit)) {
      throw InputError("J and K are limited to " + std::to_string(kDefaultSizeLimit) +
                       " (use --no-limits to lift)");
    }

    OptimizerConfig config;
    config.num_states = prob.num_states;
    config.num_outcomes = prob.num_outcomes;
    config.sa_percent = o.sa_percent;
    config.tolerance = o.tolerance;
    if (o.machine_epsilon) config.machine_epsilon = *o.machine_epsilon;
    config.max_iterations = o.max_iterations;
    config.seed = seed;
    config.restarts = o.restarts;
    try {
      config.validate();
    } catch (const Error& e) {
      throw InputError(e.what());
    }

    InitialPoint initial;
    if (o.fixed_ensemble_path) {
      const auto states = parse_matrix_list(read_file(*o.fixed_ensemble_path));
      if (states.empty()) throw InputError("fixed ensemble file has no states");
      initial.ensemble = Ensemble::from_states(states);
      config.num_states = initial.ensemble->size();
      config.optimize_ensemble = false;
    }

    const auto count = prob.channels.size();
    for (std::size_t c = 0; c < count; ++c) {
      const auto& ch = prob.channels[c];
      if (initial.ensemble && initial.ensemble->dim() != ch.input_dim()) {
        throw InputError("fixed ensemble dimension does not match the channel input");
      }
      const RunReport report = multi_restart(ch, config, initial);
      const auto path = channel_output_path(o.output_path, c, count);
      {
        std::ofstream file(path, std::ios::binary | std::ios::trunc);
        if (!file) throw InputError("cannot write output file '" + path.string() + "'");
        file << serialize_output(report, count);
      }
      out << "channel " << (c + 1) << ": AI = " << format_fixed(report.final_ai, 6)
          << " (seed " << report.config.seed << ")\n";
      if (!o.quiet) {
        out << "  iterations = " << report.trace.size()
            << ", converged = " << (report.converged ? "yes" : "no")
            << ", reduced outcomes = " << report.reduced_povm.size() << ", output = " << path.string()
            << "\n";
      }
    }
    return kSuccess;
  } catch (const NumericalError& e) {
    err << "qcap: numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << "qcap: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace qcap::cli
