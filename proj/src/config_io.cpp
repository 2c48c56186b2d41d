#include "jointflow/config_io.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "jointflow/image_io.hpp"

namespace jointflow {

std::string_view toString(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Identity: return "identity";
    case OperatorKind::Mask: return "mask";
    case OperatorKind::Subsample: return "subsample";
    case OperatorKind::Blur: return "blur";
  }
  return "identity";
}

std::string_view toString(InitKind kind) { return kind == InitKind::Rof ? "rof" : "smooth"; }

OperatorKind parseOperatorKind(std::string_view text) {
  if (text == "identity") return OperatorKind::Identity;
  if (text == "mask") return OperatorKind::Mask;
  if (text == "subsample") return OperatorKind::Subsample;
  if (text == "blur") return OperatorKind::Blur;
  throw std::invalid_argument("unknown operator '" + std::string(text) + "' (identity, mask, subsample, blur)");
}

InitKind parseInitKind(std::string_view text) {
  if (text == "rof") return InitKind::Rof;
  if (text == "smooth") return InitKind::SmoothTime;
  throw std::invalid_argument("unknown init '" + std::string(text) + "' (rof, smooth)");
}

double defaultPyramidSigma(double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("eta must lie in (0, 1)");
  return 0.5 * std::sqrt(1.0 / (eta * eta) - 1.0);
}

void SolveConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid config: ") + what);
  };
  require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be >= 0");
  require(std::isfinite(beta) && beta >= 0.0, "beta must be >= 0");
  require(std::isfinite(gamma) && gamma >= 0.0, "gamma must be >= 0");
  require(eta > 0.0 && eta < 1.0, "eta must lie in (0, 1)");
  require(nWarps >= 1, "warps must be >= 1");
  require(sizeMed >= 1 && sizeMed % 2 == 1, "median size must be odd and >= 1");
  require(minScaleDim >= 4, "minScaleDim must be >= 4");
  require(std::isfinite(sigmaD) && sigmaD >= 0.0, "sigmaD must be >= 0");
  require(epsU > 0.0 && epsV > 0.0 && epsMain > 0.0, "tolerances must be > 0");
  require(nRes >= 1, "nRes must be >= 1");
  require(iterMainMax >= 1, "max-outer must be >= 1");
  require(flowMaxIterations >= 1 && imageMaxIterations >= 1, "iteration caps must be >= 1");
  require(subsampleFactor >= 1, "subsample factor must be >= 1");
  require(std::isfinite(blurSigma) && blurSigma > 0.0, "blur sigma must be > 0");
  require(operatorKind != OperatorKind::Mask || !maskPath.empty(), "mask operator needs a mask path");
  require(std::isfinite(epsilonT) && epsilonT > 0.0, "epsilonT must be > 0");
  require(threads >= 0, "threads must be >= 0");
}

nlohmann::json configToJson(const SolveConfig& c) {
  return {
      {"alpha", c.alpha},
      {"beta", c.beta},
      {"gamma", c.gamma},
      {"eta", c.eta},
      {"nWarps", c.nWarps},
      {"sizeMed", c.sizeMed},
      {"minScaleDim", c.minScaleDim},
      {"sigmaD", c.sigmaD},
      {"epsU", c.epsU},
      {"epsV", c.epsV},
      {"epsMain", c.epsMain},
      {"nRes", c.nRes},
      {"iterMainMax", c.iterMainMax},
      {"flowMaxIterations", c.flowMaxIterations},
      {"imageMaxIterations", c.imageMaxIterations},
      {"operator", std::string(toString(c.operatorKind))},
      {"subsampleFactor", c.subsampleFactor},
      {"blurSigma", c.blurSigma},
      {"maskPath", c.maskPath},
      {"timeContinuous", c.timeContinuous},
      {"init", std::string(toString(c.init))},
      {"epsilonT", c.epsilonT},
      {"threads", c.threads},
  };
}

namespace {

template <typename T>
void take(const nlohmann::json& j, const std::string& key, T& out) {
  try {
    out = j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument("config key '" + key + "' has the wrong type");
  }
}

void setKey(SolveConfig& c, const std::string& key, const nlohmann::json& v) {
  if (key == "alpha") take(v, key, c.alpha);
  else if (key == "beta") take(v, key, c.beta);
  else if (key == "gamma") take(v, key, c.gamma);
  else if (key == "eta") take(v, key, c.eta);
  else if (key == "nWarps") take(v, key, c.nWarps);
  else if (key == "sizeMed") take(v, key, c.sizeMed);
  else if (key == "minScaleDim") take(v, key, c.minScaleDim);
  else if (key == "sigmaD") take(v, key, c.sigmaD);
  else if (key == "epsU") take(v, key, c.epsU);
  else if (key == "epsV") take(v, key, c.epsV);
  else if (key == "epsMain") take(v, key, c.epsMain);
  else if (key == "nRes") take(v, key, c.nRes);
  else if (key == "iterMainMax") take(v, key, c.iterMainMax);
  else if (key == "flowMaxIterations") take(v, key, c.flowMaxIterations);
  else if (key == "imageMaxIterations") take(v, key, c.imageMaxIterations);
  else if (key == "subsampleFactor") take(v, key, c.subsampleFactor);
  else if (key == "blurSigma") take(v, key, c.blurSigma);
  else if (key == "maskPath") take(v, key, c.maskPath);
  else if (key == "timeContinuous") take(v, key, c.timeContinuous);
  else if (key == "epsilonT") take(v, key, c.epsilonT);
  else if (key == "threads") take(v, key, c.threads);
  else if (key == "operator") {
    std::string s;
    take(v, key, s);
    c.operatorKind = parseOperatorKind(s);
  } else if (key == "init") {
    std::string s;
    take(v, key, s);
    c.init = parseInitKind(s);
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

SolveConfig configFromJson(const nlohmann::json& j, SolveConfig base) {
  if (!j.is_object()) throw std::invalid_argument("config JSON must be an object");
  for (const auto& [key, value] : j.items()) setKey(base, key, value);
  return base;
}

SolveConfig configFromKeyValue(const std::string& text, SolveConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineNo) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string raw = trim(line.substr(eq + 1));
    nlohmann::json value;
    // numbers and booleans parse as JSON, anything else is a bare string
    try {
      value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
      value = raw;
    }
    setKey(base, key, value);
  }
  return base;
}

SolveConfig parseConfigText(const std::string& text, SolveConfig base) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(std::string("config JSON: ") + e.what());
    }
    return configFromJson(j, std::move(base));
  }
  return configFromKeyValue(text, std::move(base));
}

SolveConfig loadConfigFile(const std::filesystem::path& path, SolveConfig base) {
  try {
    return parseConfigText(readFileBytes(path), std::move(base));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

nlohmann::json energyTermsToJson(const EnergyTerms& t) {
  return {{"data", t.data}, {"imageTV", t.imageTV}, {"coupling", t.coupling}, {"flowTV", t.flowTV},
          {"total", t.total()}};
}

nlohmann::json diagnosticsToJson(const JointDiagnostics& d, const SolveConfig& cfg) {
  nlohmann::json iters = nlohmann::json::array();
  for (const auto& it : d.iterations) {
    iters.push_back({
        {"iteration", it.iteration},
        {"energy", it.energy},
        {"terms", energyTermsToJson(it.terms)},
        {"rMain", it.rMain},
        {"flowIterations", it.flowIterations},
        {"flowConverged", it.flowConverged},
        {"imageIterations", it.imageIterations},
        {"imageResidual", it.imageResidual},
        {"imageConverged", it.imageConverged},
    });
  }
  return {
      {"schemaVersion", kDiagnosticsSchemaVersion},
      {"config", configToJson(cfg)},
      {"initialEnergy", d.initialEnergy},
      {"initialTerms", energyTermsToJson(d.initialTerms)},
      {"initIterations", d.initIterations},
      {"initConverged", d.initConverged},
      {"finalEnergy", d.finalEnergy()},
      {"converged", d.converged},
      {"outerIterations", iters},
      {"warnings", d.warnings},
  };
}

nlohmann::json timingsToJson(const JointDiagnostics& d) {
  nlohmann::json iters = nlohmann::json::array();
  double total = d.initSeconds;
  for (const auto& it : d.iterations) {
    iters.push_back({{"iteration", it.iteration}, {"flowSeconds", it.flowSeconds}, {"imageSeconds", it.imageSeconds}});
    total += it.flowSeconds + it.imageSeconds;
  }
  return {{"schemaVersion", kDiagnosticsSchemaVersion}, {"initSeconds", d.initSeconds}, {"outerIterations", iters},
          {"totalSeconds", total}};
}

}  // namespace jointflow
