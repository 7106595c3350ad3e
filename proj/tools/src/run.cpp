#include <exception>
#include <ostream>

#include "CLI11.hpp"
#include "motrims/error.hpp"
#include "motrims/io/config.hpp"
#include "motrims/version.hpp"
#include "motrims_cli/commands.hpp"

namespace motrims::cli {

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"motrims: strong-field photoionization of cold Rb, simulated end to end"};
  app.set_version_flag("--version", std::string(code_version()));
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::string format;
  bool svg = false;
  bool dump = false;
  app.add_option("--config", config_path, "run configuration file (defaults reproduce the 3D MOT run)");
  app.add_option("--seed", seed, "RNG seed (run.seed)");
  app.add_option("--out", out_dir, "output directory (run.out)");
  app.add_option("--set", overrides, "override one key, section.key=value (repeatable)");
  app.add_option("--format", format, "event file format (run.format)")->check(CLI::IsMember({"csv", "bin"}));
  app.add_flag("--svg", svg, "also write SVG renderings");
  app.add_flag("--dump-config", dump, "print the effective configuration and exit");

  auto* constants = app.add_subcommand("constants", "scalar quantities: photon energy, U_p, Keldysh, excess energies");
  auto* spectrum = app.add_subcommand("spectrum", "SFA (p_z, p_x) map and cylinder-sliced p_z curve");
  auto* simulate = app.add_subcommand("simulate", "ensemble + apparatus forward model -> detector events");
  auto* reconstruct = app.add_subcommand("reconstruct", "events -> momenta, histograms, fits");
  auto* characterize = app.add_subcommand("characterize", "target characterization: expansion | scan | absorption");
  for (auto* s : {constants, spectrum, simulate, reconstruct, characterize}) s->fallthrough();

  SimulateInputs sim_in;
  simulate->add_option("--spectrum-5s", sim_in.spectrum_5s, "precomputed 3D 5s SpectrumMap");
  simulate->add_option("--spectrum-5p", sim_in.spectrum_5p, "precomputed 3D 5p SpectrumMap");
  ReconstructInputs rec_in;
  reconstruct->add_option("--events", rec_in.events, "event file (CSV or binary)")->required();
  CharacterizeInputs ch_in;
  characterize->add_option("what", ch_in.what, "expansion | scan | absorption")
      ->required()
      ->check(CLI::IsMember({"expansion", "scan", "absorption"}));
  characterize->add_option("--input", ch_in.input, "data file; synthesized from the config when absent");
  characterize->add_option("--reference", ch_in.reference, "absorption: image without atoms");
  characterize->add_option("--dark", ch_in.dark, "absorption: dark frame");
  characterize->add_option("--axis", ch_in.axis, "scan axis for synthesis")->check(CLI::IsMember({"x", "z"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    Context ctx;
    ctx.out = &out;
    if (!config_path.empty()) ctx.config = io::load_config(config_path);
    for (const auto& o : overrides) io::apply_override(ctx.config, o);
    if (seed) ctx.config.run.seed = *seed;
    if (!out_dir.empty()) ctx.config.run.out = out_dir;
    if (!format.empty()) ctx.config.run.format = io::parse_event_format(format);
    if (svg) ctx.config.run.svg = true;
    if (dump) {
      out << io::dump_config(ctx.config);
      return 0;
    }
    ctx.config.validate();
    if (*constants) {
      cmd_constants(ctx);
    } else if (*spectrum) {
      cmd_spectrum(ctx);
    } else if (*simulate) {
      cmd_simulate(ctx, sim_in);
    } else if (*reconstruct) {
      cmd_reconstruct(ctx, rec_in);
    } else if (*characterize) {
      cmd_characterize(ctx, ch_in);
    } else {
      err << app.help();
      return 2;
    }
  } catch (const Error& e) {
    err << "motrims: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "motrims: internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace motrims::cli
