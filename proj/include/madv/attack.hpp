#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "madv/nets.hpp"
#include "madv/overlay.hpp"
#include "madv/pepg.hpp"
#include "madv/tensor.hpp"

/// GAN pretraining and the two patch attacks: random placement (fresh
/// theta ~ p_theta per composite) and PEPG-optimised placement.
namespace madv::attack {

enum class Method { patch, pepg };
enum class GeneratorLoss {
  minimax,         // log(1 - D(G(z)))
  non_saturating,  // -log D(G(z))
};

const char* method_name(Method m);

struct AttackConfig {
  std::size_t target = 0;
  std::size_t patch_size = 16;
  std::size_t batch = 16;  // m, shared by the D and G updates
  double alpha = 10.0;
  std::size_t max_iterations = 5000;
  std::size_t quota = 20;  // kUnlimited never stops early
  std::uint64_t seed = 0;
  Method method = Method::pepg;
  GeneratorLoss generator_loss = GeneratorLoss::minimax;

  double gan_lr = 2e-4;
  double gan_beta1 = 0.5;

  double beta_scale = 0.05;       // beta_mu = beta_scale * sigma_init
  double beta_sigma_ratio = 0.5;  // beta_sigma = ratio * beta_mu
  double sigma_min = 0.05;

  // Audio loudness is set as a level: snippet RMS times gain over host RMS.
  double audio_level = 0.5;      // fixed level of the random-placement audio attack
  double audio_level_max = 0.9;  // upper bound of the PEPG level dimension

  static constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();
};

using Placement = std::variant<overlay::PlacementParams, overlay::AudioPlacement>;

struct AdversarialRecord {
  Tensor composite;
  Tensor patch;
  Placement placement;
  std::size_t target = 0;
  double confidence = 0.0;  // softmax probability of the target
  std::size_t iteration = 0;
};

struct AttackReport {
  bool success = false;
  std::size_t iterations = 0;
  std::size_t collected = 0;
  std::vector<double> d_loss;   // per iteration, mean over the batch
  std::vector<double> g_loss;   // GAN term of the generator objective
  std::vector<double> lf_loss;  // mean targeted cross-entropy
  std::vector<std::vector<double>> mu_trace;     // PEPG only, after each update
  std::vector<std::vector<double>> sigma_trace;  // PEPG only
};

struct AttackResult {
  AttackReport report;
  std::vector<AdversarialRecord> records;
  std::optional<pepg::PepgState> pepg_state;
};

// ------------------------------------------------------------ pretraining

struct GanOptions {
  std::size_t iterations = 1000;
  std::size_t batch = 16;
  double lr = 2e-4;
  double beta1 = 0.5;
  GeneratorLoss generator_loss = GeneratorLoss::minimax;
  std::uint64_t seed = 0;
};

struct GanReport {
  std::vector<double> d_loss;
  std::vector<double> g_loss;
};

/// Plays the pure adversarial game on `references` in place; no classifier
/// term is involved.
GanReport train_gan(nets::Network& generator, nets::Network& discriminator, const std::vector<Tensor>& references,
                    const GanOptions& options);

struct GanPair {
  nets::Generator generator;
  nets::Discriminator discriminator;
  GanReport report;
};

/// Fresh G and D sized to the references ([3,s,s] each), then train_gan.
GanPair pretrain_gan(const std::vector<Tensor>& references, const GanOptions& options);

struct AudioGanPair {
  nets::AudioGenerator generator;
  nets::AudioDiscriminator discriminator;
  GanReport report;
};

/// Same for [1,L] reference snippets.
AudioGanPair pretrain_audio_gan(const std::vector<Tensor>& references, const GanOptions& options);

/// Fraction of correct D decisions (threshold 0.5) over `count` real
/// samples drawn from `references` and `count` fresh fakes.
double discriminator_accuracy(const nets::Network& generator, const nets::Network& discriminator,
                              const std::vector<Tensor>& references, std::size_t count, std::uint64_t seed);

/// Standard normal latent vector.
Tensor sample_latent(std::size_t dim, Rng& rng);

// ---------------------------------------------------------------- attacks

/// Runs config.method against one image. The networks are copied; the
/// caller's weights are never modified.
AttackResult run_attack(const nets::Network& classifier, const nets::Network& generator,
                        const nets::Network& discriminator, const Tensor& image,
                        const std::vector<Tensor>& references, const AttackConfig& config);

AttackResult run_patch_attack(const nets::Network& classifier, const nets::Network& generator,
                              const nets::Network& discriminator, const Tensor& image,
                              const std::vector<Tensor>& references, const AttackConfig& config);

AttackResult run_pepg_attack(const nets::Network& classifier, const nets::Network& generator,
                             const nets::Network& discriminator, const Tensor& image,
                             const std::vector<Tensor>& references, const AttackConfig& config);

/// Waveform analog: placement is (offset, gain). PEPG optimises the offset
/// and a loudness level in [0, audio_level_max]; the patch method draws the
/// offset uniformly and uses the fixed audio_level. Each composite turns the
/// level into a gain with audio_gain_for_level, and records store that gain.
AttackResult run_audio_attack(const nets::Network& classifier, const nets::Network& generator,
                              const nets::Network& discriminator, const Tensor& host,
                              const std::vector<Tensor>& references, const AttackConfig& config);

/// Audio placement coordinates: offset in hops of kAudioOffsetUnit samples,
/// level in units of kAudioLevelUnit. Both keep the PEPG step sizes on the
/// same scale as the image coordinates.
inline constexpr double kAudioOffsetUnit = 64.0;
inline constexpr double kAudioLevelUnit = 0.01;

/// PEPG state used by the audio attack for a snippet of `snippet_length`
/// on a host of `host_length`, in the units above.
pepg::PepgState audio_placement_state(std::size_t snippet_length, std::size_t host_length,
                                      const AttackConfig& config);
/// Maps a real (offset, level) sample in PEPG units onto a valid offset and
/// a level in [0, level_max]; the level is returned in the gain field.
overlay::AudioPlacement to_audio_placement(const std::vector<double>& theta, std::size_t snippet_length,
                                           std::size_t host_length, double level_max);

/// Gain that makes RMS(snippet) * gain / RMS(host) equal `level`; zero for
/// a silent snippet.
double audio_gain_for_level(double level, const Tensor& snippet, const Tensor& host);

/// Re-places a record's patch on `base` with the stored placement.
Tensor recomposite(const AdversarialRecord& record, const Tensor& base);

}  // namespace madv::attack
