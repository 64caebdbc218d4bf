#include "starswipt/baselines.hpp"

namespace starswipt::baselines {

const char* to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::EsMode: return "es_mode";
    case Scheme::EqualAmplitudeEs: return "equal_amplitude_es";
    case Scheme::ConventionalRis: return "conventional_ris";
    case Scheme::WithoutRis: return "without_ris";
  }
  return "unknown";
}

ao::SolveReport run_baseline(Scheme scheme, const ChannelSet& channels,
                             const SystemConfig& config, const ao::AoOptions& opts,
                             RngStream& rng) {
  ao::AoOptions o = opts;
  switch (scheme) {
    case Scheme::EsMode:
      o.star_mode = sdr::StarMode::Free;
      break;
    case Scheme::EqualAmplitudeEs:
      o.star_mode = sdr::StarMode::EqualHalf;
      o.phase_only_recovery = true;
      break;
    case Scheme::ConventionalRis:
      o.star_mode = sdr::StarMode::ReflectOnly;
      break;
    case Scheme::WithoutRis: {
      ChannelSet direct = channels;
      direct.G.setZero();
      for (auto& gk : direct.g) gk.setZero();
      o.optimize_star = false;
      return ao::run_ao(direct, config, o, rng);
    }
  }
  return ao::run_ao(channels, config, o, rng);
}

}  // namespace starswipt::baselines
