#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include "jointflow/config_io.hpp"
#include "jointflow/flow_io.hpp"
#include "jointflow/flow_solver.hpp"
#include "jointflow/image_io.hpp"
#include "jointflow/image_solver.hpp"
#include "jointflow/joint.hpp"
#include "jointflow/metrics.hpp"
#include "jointflow/synth.hpp"

namespace jointflow::cli {

namespace fs = std::filesystem;

namespace {

// Solver flags are bound to a scratch config and copied over the base config only when given,
// so they override --config.
struct SolveFlags {
  SolveConfig given;
  std::string operatorName;
  std::string initName;
  std::string configPath;
  bool dumpConfig = false;
  std::vector<std::pair<CLI::Option*, std::function<void(SolveConfig&)>>> overrides;

  template <typename T>
  void bind(CLI::App* app, const std::string& name, T SolveConfig::*field, const std::string& help) {
    auto* opt = app->add_option(name, given.*field, help);
    overrides.emplace_back(opt, [this, field](SolveConfig& c) { c.*field = given.*field; });
  }

  void addImageFlags(CLI::App* app) {
    bind(app, "--alpha", &SolveConfig::alpha, "image TV weight");
    bind(app, "--tol-u", &SolveConfig::epsU, "image solver residual tolerance");
    bind(app, "--max-image-iter", &SolveConfig::imageMaxIterations, "image solver iteration cap");
    auto* op = app->add_option("--operator", operatorName, "forward operator: identity, mask, subsample, blur");
    overrides.emplace_back(op, [this](SolveConfig& c) { c.operatorKind = parseOperatorKind(operatorName); });
    bind(app, "--mask", &SolveConfig::maskPath, "observed-pixel mask image (nonzero = observed)");
    bind(app, "--subsample", &SolveConfig::subsampleFactor, "subsampling factor");
    bind(app, "--blur-sigma", &SolveConfig::blurSigma, "blur kernel std-dev");
  }

  void addFlowFlags(CLI::App* app) {
    bind(app, "--beta", &SolveConfig::beta, "flow TV weight");
    bind(app, "--gamma", &SolveConfig::gamma, "coupling weight");
    auto* eta = app->add_option("--eta", given.eta, "pyramid downsampling factor in (0, 1)");
    overrides.emplace_back(eta, [this](SolveConfig& c) {
      c.eta = given.eta;
      c.sigmaD = defaultPyramidSigma(given.eta);
    });
    bind(app, "--sigma-d", &SolveConfig::sigmaD, "pyramid presmoothing std-dev (default follows --eta)");
    bind(app, "--warps", &SolveConfig::nWarps, "warps per pyramid level");
    bind(app, "--median", &SolveConfig::sizeMed, "median filter size (odd)");
    bind(app, "--min-scale", &SolveConfig::minScaleDim, "smallest pyramid dimension");
    bind(app, "--tol-v", &SolveConfig::epsV, "flow solver residual tolerance");
    bind(app, "--max-flow-iter", &SolveConfig::flowMaxIterations, "flow solver iteration cap");
    bind(app, "--n-res", &SolveConfig::nRes, "iterations between residual checks");
    bind(app, "--threads", &SolveConfig::threads, "worker threads for flow pairs (0 = all cores)");
    auto* tc = app->add_flag("--time-continuous", given.timeContinuous, "time-continuous coupling instead of warping");
    overrides.emplace_back(tc, [this](SolveConfig& c) { c.timeContinuous = given.timeContinuous; });
  }

  void addJointFlags(CLI::App* app) {
    bind(app, "--tol-main", &SolveConfig::epsMain, "outer loop tolerance");
    bind(app, "--max-outer", &SolveConfig::iterMainMax, "outer iteration cap");
    bind(app, "--epsilon-t", &SolveConfig::epsilonT, "temporal smoothing weight for --init smooth");
    auto* init = app->add_option("--init", initName, "initialization: rof or smooth")
                     ->check(CLI::IsMember({"rof", "smooth"}));
    overrides.emplace_back(init, [this](SolveConfig& c) { c.init = parseInitKind(initName); });
  }

  void addConfigFlags(CLI::App* app) {
    app->add_option("--config", configPath, "config file (JSON or key = value)");
    app->add_flag("--dump-config", dumpConfig, "print the effective config as JSON and exit");
  }

  SolveConfig resolve() const {
    SolveConfig cfg = configPath.empty() ? SolveConfig{} : loadConfigFile(configPath);
    for (const auto& [opt, apply] : overrides)
      if (opt->count() > 0) apply(cfg);
    cfg.validate();
    return cfg;
  }
};

std::string indexed(const std::string& prefix, std::size_t i, std::size_t count, const std::string& ext) {
  const int digits = std::max<int>(2, static_cast<int>(std::to_string(count > 0 ? count - 1 : 0).size()));
  std::ostringstream s;
  s << prefix << std::setw(digits) << std::setfill('0') << i << ext;
  return s.str();
}

bool wildcardMatch(const std::string& pattern, const std::string& text) {
  std::size_t p = 0, t = 0, star = std::string::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

// A directory, a filename pattern with * or ?, or an explicit list of files.
std::vector<fs::path> resolveFrames(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path path(in);
    if (fs::is_directory(path)) {
      const auto listed = listFrameFiles(path);
      files.insert(files.end(), listed.begin(), listed.end());
    } else if (in.find_first_of("*?") != std::string::npos) {
      const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
      std::vector<fs::path> matched;
      for (const auto& f : listFrameFiles(dir))
        if (wildcardMatch(path.filename().string(), f.filename().string())) matched.push_back(f);
      std::sort(matched.begin(), matched.end());
      files.insert(files.end(), matched.begin(), matched.end());
    } else {
      files.push_back(path);
    }
  }
  if (files.empty()) throw std::invalid_argument("no input frames found");
  return files;
}

ImageSequence readFrames(const std::vector<fs::path>& files) {
  ImageSequence seq;
  for (const auto& f : files) seq.frames.push_back(readImage(f));
  seq.validate();
  return seq;
}

std::vector<fs::path> listFloFiles(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".flo") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

ForwardOperator forwardFor(const SolveConfig& cfg, int dataWidth, int dataHeight) {
  const auto [w, h] = reconstructionSize(cfg.operatorKind, dataWidth, dataHeight, cfg.subsampleFactor);
  ForwardParams params;
  params.factor = cfg.subsampleFactor;
  params.blurSigma = cfg.blurSigma;
  if (cfg.operatorKind == OperatorKind::Mask) {
    const Image mask = readImage(cfg.maskPath);
    if (mask.width() != dataWidth || mask.height() != dataHeight)
      throw std::invalid_argument("mask size does not match the input frames");
    params.mask.resize(mask.size());
    for (std::size_t p = 0; p < mask.size(); ++p) params.mask[p] = mask[p] > 0.5 ? 1 : 0;
  }
  return buildForwardOperator(cfg.operatorKind, w, h, params);
}

ImageSolveParams imageParams(const SolveConfig& cfg) { return {cfg.epsU, cfg.nRes, cfg.imageMaxIterations}; }

void writeFrames(const fs::path& dir, const ImageSequence& u) {
  for (std::size_t i = 0; i < u.frames.size(); ++i)
    writeImage(dir / indexed("u_", i, u.frames.size(), ".pgm"), u.frames[i], 16);
}

void writeFlows(const fs::path& dir, const FlowSequence& v) {
  for (std::size_t i = 0; i < v.fields.size(); ++i) {
    writeFlo(dir / indexed("flow_", i, v.fields.size(), ".flo"), v.fields[i]);
    writePpm(dir / indexed("flow_", i, v.fields.size(), ".ppm"), flowToColor(v.fields[i]));
  }
}

std::string formatValue(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::setprecision(10) << x;
  return s.str();
}

// ---- joint ----

struct JointArgs {
  std::vector<std::string> inputs;
  std::string out;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

int runJoint(const JointArgs& a, const SolveConfig& cfg, std::ostream& out) {
  ImageSequence f = readFrames(resolveFrames(a.inputs));
  if (a.noise > 0.0) f = addGaussianNoise(f, 0.0, a.noise, a.seed);
  const auto op = forwardFor(cfg, f.frames.front().width(), f.frames.front().height());
  const auto result = solveJoint(f, op, cfg);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  writeFrames(dir, result.u);
  writeFlows(dir, result.v);
  writeFileAtomic(dir / "diagnostics.json", diagnosticsToJson(result.diagnostics, cfg).dump(2) + "\n");
  writeFileAtomic(dir / "timings.json", timingsToJson(result.diagnostics).dump(2) + "\n");
  const auto& d = result.diagnostics;
  out << "joint: " << result.u.frames.size() << " frames, " << d.iterations.size()
      << " outer iterations, energy " << formatValue(d.initialEnergy) << " -> " << formatValue(d.finalEnergy())
      << (d.converged ? "" : " (outer loop hit its cap)") << "\n";
  for (const auto& w : d.warnings) out << "warning: " << w << "\n";
  return 0;
}

// ---- flow ----

struct FlowArgs {
  std::string frame1, frame2, out, color;
};

int runFlow(const FlowArgs& a, const SolveConfig& cfg, std::ostream& out) {
  const Image u1 = readImage(a.frame1);
  const Image u2 = readImage(a.frame2);
  if (!u1.sameShape(u2)) throw std::invalid_argument("flow: frames differ in size");
  const auto r = solveFlowPyramid(u1, u2, cfg);
  writeFlo(a.out, r.flow);
  if (!a.color.empty()) writePpm(a.color, flowToColor(r.flow));
  out << "flow: " << r.stats.solves.size() << " solves, " << r.stats.totalIterations() << " iterations"
      << (r.stats.allConverged() ? "" : " (some solves hit the iteration cap)") << "\n";
  return 0;
}

// ---- denoise ----

struct DenoiseArgs {
  std::vector<std::string> inputs;
  std::string out;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

int runDenoise(const DenoiseArgs& a, const SolveConfig& cfg, std::ostream& out) {
  ImageSequence f = readFrames(resolveFrames(a.inputs));
  if (a.noise > 0.0) f = addGaussianNoise(f, 0.0, a.noise, a.seed);
  const auto op = forwardFor(cfg, f.frames.front().width(), f.frames.front().height());
  const auto r = initROF(f, op, cfg.alpha, imageParams(cfg));
  const fs::path dir(a.out);
  fs::create_directories(dir);
  writeFrames(dir, r.u);
  out << "denoise: " << r.u.frames.size() << " frames, " << r.iterations << " iterations"
      << (r.converged ? "" : " (iteration cap reached)") << "\n";
  return 0;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string result, reference, out, sequence;
};

int runEvaluate(const EvaluateArgs& a, std::ostream& out) {
  const ImageSequence u = readFrames(listFrameFiles(a.result));
  const ImageSequence ref = readFrames(listFrameFiles(a.reference));
  if (u.frames.size() != ref.frames.size())
    throw std::invalid_argument("evaluate: " + std::to_string(u.frames.size()) + " result frames vs " +
                                std::to_string(ref.frames.size()) + " reference frames");
  const auto m = sequenceMetrics(u, ref);

  const auto flows = listFloFiles(a.result);
  const auto refFlows = listFloFiles(a.reference);
  double epe = std::numeric_limits<double>::quiet_NaN();
  double ae = epe;
  if (!refFlows.empty()) {
    if (flows.size() != refFlows.size())
      throw std::invalid_argument("evaluate: " + std::to_string(flows.size()) + " result flows vs " +
                                  std::to_string(refFlows.size()) + " reference flows");
    epe = ae = 0.0;
    for (std::size_t i = 0; i < flows.size(); ++i) {
      const auto v = readFlo(flows[i]);
      const auto w = readFlo(refFlows[i]);
      const auto mask = validFlowMask(w);
      epe += endpointError(v, w, mask);
      ae += angularError(v, w, mask);
    }
    epe /= static_cast<double>(flows.size());
    ae /= static_cast<double>(flows.size());
  }

  const std::string name = a.sequence.empty() ? fs::path(a.result).lexically_normal().filename().string() : a.sequence;
  std::ostringstream csv;
  csv << "sequence,SSIM,L2Error,PSNR,PSNR255,EPE,AE\n";
  csv << name << "," << formatValue(m.ssim) << "," << formatValue(m.l2) << "," << formatValue(m.psnr) << ","
      << formatValue(m.psnr255) << "," << formatValue(epe) << "," << formatValue(ae) << "\n";
  if (a.out.empty()) {
    out << csv.str();
  } else {
    writeFileAtomic(a.out, csv.str());
  }
  return 0;
}

// ---- synth ----

struct SynthArgs {
  std::string out;
  std::string motion = "translate";
  int width = 64, height = 64, frames = 5, blobs = 6;
  double dx = 2.0, dy = 1.0, angle = 0.05, noise = 0.0;
  std::uint64_t seed = 1;
};

int runSynth(const SynthArgs& a, std::ostream& out) {
  SynthSpec spec;
  spec.width = a.width;
  spec.height = a.height;
  spec.frames = a.frames;
  spec.motion = a.motion == "rotate" ? SynthMotion::Rotate : SynthMotion::Translate;
  spec.dx = a.dx;
  spec.dy = a.dy;
  spec.angle = a.angle;
  spec.blobs = randomBlobs(a.blobs, a.width, a.height, a.seed);
  const auto seq = renderSequence(spec);
  const ImageSequence noisy = a.noise > 0.0 ? addGaussianNoise(seq.frames, 0.0, a.noise, a.seed) : seq.frames;

  // one affine map brings clean and noisy frames into the storable range [0, 1]
  double lo = 0.0, hi = 1.0;
  for (const auto* s : {&seq.frames, &noisy})
    for (const auto& fr : s->frames)
      for (double x : fr.values()) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
  const double scale = hi - lo;
  auto mapped = [&](const ImageSequence& s) {
    ImageSequence m = s;
    for (auto& fr : m.frames)
      for (auto& x : fr.data()) x = (x - lo) / scale;
    return m;
  };

  const fs::path dir(a.out);
  fs::create_directories(dir / "clean");
  const auto clean = mapped(seq.frames);
  for (std::size_t i = 0; i < clean.frames.size(); ++i)
    writeImage(dir / "clean" / indexed("frame_", i, clean.frames.size(), ".pgm"), clean.frames[i], 16);
  for (std::size_t i = 0; i < seq.flows.fields.size(); ++i)
    writeFlo(dir / "clean" / indexed("flow_", i, seq.flows.fields.size(), ".flo"), seq.flows.fields[i]);
  if (a.noise > 0.0) {
    fs::create_directories(dir / "noisy");
    const auto n = mapped(noisy);
    for (std::size_t i = 0; i < n.frames.size(); ++i)
      writeImage(dir / "noisy" / indexed("frame_", i, n.frames.size(), ".pgm"), n.frames[i], 16);
  }
  const nlohmann::json meta = {
      {"width", a.width}, {"height", a.height}, {"frames", a.frames}, {"motion", a.motion},
      {"dx", a.dx},       {"dy", a.dy},         {"angle", a.angle},   {"blobs", a.blobs},
      {"noiseVariance", a.noise}, {"seed", a.seed},
      // stored = (value - offset) / scale
      {"intensityOffset", lo}, {"intensityScale", scale},
  };
  writeFileAtomic(dir / "synth.json", meta.dump(2) + "\n");
  out << "synth: wrote " << a.frames << " frames to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int runCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint motion estimation and image reconstruction", "jointflow"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  // joint
  auto* joint = app.add_subcommand("joint", "reconstruct a frame sequence and its flows jointly");
  JointArgs jointArgs;
  SolveFlags jointFlags;
  joint->add_option("inputs", jointArgs.inputs, "frame directory, pattern, or files");
  joint->add_option("-o,--out", jointArgs.out, "output directory");
  joint->add_option("--noise", jointArgs.noise, "add Gaussian noise of this variance to the input");
  joint->add_option("--seed", jointArgs.seed, "noise seed");
  jointFlags.addImageFlags(joint);
  jointFlags.addFlowFlags(joint);
  jointFlags.addJointFlags(joint);
  jointFlags.addConfigFlags(joint);

  // flow
  auto* flow = app.add_subcommand("flow", "optical flow between two frames");
  FlowArgs flowArgs;
  SolveFlags flowFlags;
  flow->add_option("frame1", flowArgs.frame1, "first frame")->required();
  flow->add_option("frame2", flowArgs.frame2, "second frame")->required();
  flow->add_option("-o,--out", flowArgs.out, "output .flo")->required();
  flow->add_option("--color", flowArgs.color, "optional PPM colour rendering");
  flowFlags.addFlowFlags(flow);
  flowFlags.addConfigFlags(flow);

  // denoise
  auto* denoise = app.add_subcommand("denoise", "frame-wise TV reconstruction");
  DenoiseArgs denoiseArgs;
  SolveFlags denoiseFlags;
  denoise->add_option("inputs", denoiseArgs.inputs, "frame directory, pattern, or files")->required();
  denoise->add_option("-o,--out", denoiseArgs.out, "output directory")->required();
  denoise->add_option("--noise", denoiseArgs.noise, "add Gaussian noise of this variance to the input");
  denoise->add_option("--seed", denoiseArgs.seed, "noise seed");
  denoiseFlags.addImageFlags(denoise);
  denoiseFlags.addConfigFlags(denoise);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "metrics of a result directory against ground truth");
  EvaluateArgs evalArgs;
  evaluate->add_option("result", evalArgs.result, "directory with u_*.pgm and flow_*.flo")->required();
  evaluate->add_option("reference", evalArgs.reference, "directory with reference frames and .flo files")
      ->required();
  evaluate->add_option("-o,--out", evalArgs.out, "CSV file (stdout when omitted)");
  evaluate->add_option("--sequence", evalArgs.sequence, "sequence name for the CSV row");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a blob sequence with ground-truth flow");
  SynthArgs synthArgs;
  synth->add_option("-o,--out", synthArgs.out, "output directory")->required();
  synth->add_option("--motion", synthArgs.motion, "translate or rotate")
      ->check(CLI::IsMember({"translate", "rotate"}));
  synth->add_option("--width", synthArgs.width)->check(CLI::PositiveNumber);
  synth->add_option("--height", synthArgs.height)->check(CLI::PositiveNumber);
  synth->add_option("--frames", synthArgs.frames)->check(CLI::Range(2, 10000));
  synth->add_option("--blobs", synthArgs.blobs)->check(CLI::NonNegativeNumber);
  synth->add_option("--dx", synthArgs.dx, "translation per frame");
  synth->add_option("--dy", synthArgs.dy);
  synth->add_option("--angle", synthArgs.angle, "rotation per frame, radians");
  synth->add_option("--noise", synthArgs.noise, "Gaussian noise variance")->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", synthArgs.seed, "seed for blobs and noise");

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (joint->parsed()) {
      const auto cfg = jointFlags.resolve();
      if (jointFlags.dumpConfig) {
        out << configToJson(cfg).dump(2) << "\n";
        return 0;
      }
      if (jointArgs.inputs.empty() || jointArgs.out.empty()) {
        err << "joint: inputs and --out are required\n" << joint->help();
        return 2;
      }
      return runJoint(jointArgs, cfg, out);
    }
    if (flow->parsed()) {
      const auto cfg = flowFlags.resolve();
      if (flowFlags.dumpConfig) {
        out << configToJson(cfg).dump(2) << "\n";
        return 0;
      }
      return runFlow(flowArgs, cfg, out);
    }
    if (denoise->parsed()) {
      const auto cfg = denoiseFlags.resolve();
      if (denoiseFlags.dumpConfig) {
        out << configToJson(cfg).dump(2) << "\n";
        return 0;
      }
      return runDenoise(denoiseArgs, cfg, out);
    }
    if (evaluate->parsed()) return runEvaluate(evalArgs, out);
    if (synth->parsed()) return runSynth(synthArgs, out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int runCli(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return runCli(args, std::cout, std::cerr);
}

}  // namespace jointflow::cli
