#pragma once

// The motrims command-line surface. Each command is a pure function of
// (config, input files, seed); only manifest.json carries timestamps.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "motrims/io/config.hpp"

namespace motrims::cli {

struct Context {
  io::RunConfig config;
  std::ostream* out = nullptr;  // human-readable progress and results
};

struct SimulateInputs {
  std::string spectrum_5s;  // precomputed 3D SpectrumMap files; empty = compute inline
  std::string spectrum_5p;
};

struct ReconstructInputs {
  std::string events;
};

struct CharacterizeInputs {
  std::string what;        // expansion | scan | absorption
  std::string input;       // empty = synthesize from the config
  std::string reference;   // absorption: image without atoms
  std::string dark;        // absorption: dark frame
  std::string axis = "z";  // scan axis for synthesis (x | z)
};

void cmd_constants(const Context& ctx);
void cmd_spectrum(const Context& ctx);
void cmd_simulate(const Context& ctx, const SimulateInputs& in);
void cmd_reconstruct(const Context& ctx, const ReconstructInputs& in);
void cmd_characterize(const Context& ctx, const CharacterizeInputs& in);

// Full argument handling; returns the process exit code
// (0 ok, 2 config, 3 data/io, 4 numerical, 1 anything else).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace motrims::cli
