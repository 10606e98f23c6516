#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "madv/ops.hpp"
#include "steps.hpp"

namespace madv::attack {
namespace {

/// How one attack family draws placements and builds composites.
struct Domain {
  std::function<std::vector<Placement>(Rng&, std::size_t m)> draw;
  std::function<Tensor(Graph&, const Tensor& patch, const Placement&)> composite;
  /// Optional: turns a drawn placement into the one applied to `patch`.
  std::function<Placement(const Tensor& patch, const Placement&)> resolve;
  /// Receives -loss for every drawn placement, in draw order.
  std::function<void(const std::vector<double>& rewards)> feedback;
};

void check_config(const nets::Network& classifier, const nets::Network& generator, const Tensor& base,
                  const std::vector<Tensor>& references, const AttackConfig& config) {
  if (base.shape() != classifier.input_shape()) {
    throw std::invalid_argument("input " + shape_str(base.shape()) + " does not match classifier input " +
                                shape_str(classifier.input_shape()));
  }
  const std::size_t classes = classifier.output_shape().at(0);
  if (config.target >= classes) {
    throw std::out_of_range("target class " + std::to_string(config.target) + " outside [0, " +
                            std::to_string(classes) + ")");
  }
  if (config.quota == 0) throw std::invalid_argument("success quota must be at least 1");
  if (config.batch == 0) throw std::invalid_argument("batch size must be positive");
  if (config.method == Method::pepg && (config.batch < 2 || config.batch % 2 != 0)) {
    throw std::invalid_argument("PEPG needs an even batch size, got " + std::to_string(config.batch));
  }
  if (!(config.alpha >= 0.0)) throw std::invalid_argument("alpha must be non-negative");
  detail::check_references(references, generator.output_shape());
}

AttackResult run_loop(const nets::Network& classifier, const nets::Network& generator,
                      const nets::Network& discriminator, const std::vector<Tensor>& references,
                      const AttackConfig& config, Domain& domain, std::optional<pepg::PepgState>& state) {
  auto f = classifier.clone();
  auto g_net = generator.clone();
  auto d_net = discriminator.clone();
  f->set_trainable(false);
  g_net->set_trainable(true);
  d_net->set_trainable(true);

  const AdamOptions adam_options{.lr = config.gan_lr, .beta1 = config.gan_beta1};
  AdamState adam_d(d_net->parameter_tensors(), adam_options);
  AdamState adam_g(g_net->parameter_tensors(), adam_options);
  Rng d_rng(derive_seed(config.seed, 0xD));
  Rng g_rng(derive_seed(config.seed, 0x6));
  Rng theta_rng(derive_seed(config.seed, 0x7E7A));
  const std::size_t m = config.batch;
  const std::size_t latent = g_net->input_shape().at(0);
  const double inv_m = 1.0 / static_cast<double>(m);

  AttackResult result;
  AttackReport& report = result.report;
  for (std::size_t it = 0; it < config.max_iterations && report.collected < config.quota; ++it) {
    report.d_loss.push_back(detail::discriminator_step(*g_net, *d_net, adam_d, references, m, d_rng));

    const std::vector<Placement> placements = domain.draw(theta_rng, m);
    std::vector<double> rewards(m);
    double gan_total = 0.0, lf_total = 0.0;
    {
      nets::FrozenScope frozen(*d_net);
      adam_g.zero_grad();
      for (std::size_t i = 0; i < m; ++i) {
        Graph g;
        Tensor patch = g_net->forward(g, sample_latent(latent, g_rng));
        Tensor gan_term = detail::generator_term(g, d_net->forward(g, patch), config.generator_loss);
        const Placement placement = domain.resolve ? domain.resolve(patch, placements[i]) : placements[i];
        Tensor composite = domain.composite(g, patch, placement);
        Tensor logits = f->forward(g, composite);
        Tensor lf = ops::softmax_cross_entropy(g, logits, config.target);
        Tensor loss = ops::scale(g, ops::add(g, gan_term, ops::scale(g, lf, config.alpha)), inv_m);
        gan_total += gan_term.item();
        lf_total += lf.item();
        rewards[i] = -lf.item();

        if (argmax(logits.data()) == config.target && report.collected < config.quota) {
          AdversarialRecord rec;
          rec.composite = composite.detach();
          rec.patch = patch.detach();
          rec.placement = placement;
          rec.target = config.target;
          rec.confidence = softmax(logits.data())[config.target];
          rec.iteration = it;
          result.records.push_back(std::move(rec));
          ++report.collected;
        }
        backprop(g, loss);
      }
      adam_g.step();
    }
    report.g_loss.push_back(gan_total * inv_m);
    report.lf_loss.push_back(lf_total * inv_m);

    if (domain.feedback) domain.feedback(rewards);
    if (state) {
      report.mu_trace.push_back(state->mu);
      report.sigma_trace.push_back(state->sigma);
    }
    report.iterations = it + 1;
  }
  report.success = report.collected >= config.quota;
  result.pepg_state = state;
  return result;
}

}  // namespace

AttackResult run_patch_attack(const nets::Network& classifier, const nets::Network& generator,
                              const nets::Network& discriminator, const Tensor& image,
                              const std::vector<Tensor>& references, const AttackConfig& config) {
  AttackConfig cfg = config;
  cfg.method = Method::patch;
  check_config(classifier, generator, image, references, cfg);
  const std::size_t side = generator.output_shape().at(1);
  if (side != cfg.patch_size) throw std::invalid_argument("generator side does not match configured patch size");
  const auto prior = overlay::PlacementPrior::for_patch(side, image.dim(1), image.dim(2));

  Domain domain;
  domain.draw = [prior](Rng& rng, std::size_t m) {
    std::vector<Placement> out;
    for (std::size_t i = 0; i < m; ++i) out.emplace_back(overlay::sample_theta(prior, rng));
    return out;
  };
  domain.composite = [&image](Graph& g, const Tensor& patch, const Placement& p) {
    return overlay::apply_patch(g, patch, image, std::get<overlay::PlacementParams>(p));
  };
  std::optional<pepg::PepgState> none;
  return run_loop(classifier, generator, discriminator, references, cfg, domain, none);
}

AttackResult run_pepg_attack(const nets::Network& classifier, const nets::Network& generator,
                             const nets::Network& discriminator, const Tensor& image,
                             const std::vector<Tensor>& references, const AttackConfig& config) {
  AttackConfig cfg = config;
  cfg.method = Method::pepg;
  check_config(classifier, generator, image, references, cfg);
  const std::size_t side = generator.output_shape().at(1);
  if (side != cfg.patch_size) throw std::invalid_argument("generator side does not match configured patch size");

  std::optional<pepg::PepgState> state = pepg::placement_state(side, image.dim(1), image.dim(2), cfg.beta_scale,
                                                               cfg.beta_sigma_ratio, cfg.sigma_min);
  std::vector<std::vector<double>> epsilons;
  Domain domain;
  domain.draw = [&state, &epsilons](Rng& rng, std::size_t m) {
    pepg::SampleBatch batch = pepg::pepg_sample(*state, m, rng);
    epsilons = std::move(batch.epsilons);
    std::vector<Placement> out;
    for (const auto& t : batch.thetas) {
      out.emplace_back(overlay::PlacementParams{std::clamp(t[0], state->lower[0], state->upper[0]),
                                                std::clamp(t[1], state->lower[1], state->upper[1]), t[2]});
    }
    return out;
  };
  domain.composite = [&image](Graph& g, const Tensor& patch, const Placement& p) {
    return overlay::apply_patch(g, patch, image, std::get<overlay::PlacementParams>(p));
  };
  domain.feedback = [&state, &epsilons](const std::vector<double>& rewards) {
    *state = pepg::pepg_update(std::move(*state), pepg::RewardBatch{epsilons, rewards});
  };
  return run_loop(classifier, generator, discriminator, references, cfg, domain, state);
}

AttackResult run_attack(const nets::Network& classifier, const nets::Network& generator,
                        const nets::Network& discriminator, const Tensor& image,
                        const std::vector<Tensor>& references, const AttackConfig& config) {
  if (config.method == Method::pepg) {
    return run_pepg_attack(classifier, generator, discriminator, image, references, config);
  }
  return run_patch_attack(classifier, generator, discriminator, image, references, config);
}

pepg::PepgState audio_placement_state(std::size_t snippet_length, std::size_t host_length,
                                      const AttackConfig& config) {
  if (snippet_length > host_length) throw std::invalid_argument("snippet longer than host");
  if (!(config.audio_level_max >= 0.0)) throw std::invalid_argument("audio level bound must be non-negative");
  const double span = static_cast<double>(host_length - snippet_length) / kAudioOffsetUnit;
  const double g = config.audio_level_max / kAudioLevelUnit;
  pepg::PepgState s = pepg::make_state({span / 2.0, g / 2.0}, {span / 4.0, g / 4.0}, {0.0, 0.0}, {span, g},
                                       {false, false}, config.beta_scale, config.beta_sigma_ratio, config.sigma_min);
  s.sigma_max = {std::max(span / 2.0, config.sigma_min), std::max(g / 2.0, config.sigma_min)};
  s.validate();
  return s;
}

overlay::AudioPlacement to_audio_placement(const std::vector<double>& theta, std::size_t snippet_length,
                                           std::size_t host_length, double level_max) {
  if (theta.size() != 2) throw std::invalid_argument("audio placement needs (offset, level)");
  const double span = static_cast<double>(host_length - snippet_length);
  overlay::AudioPlacement p;
  p.offset = static_cast<std::size_t>(std::llround(std::clamp(theta[0] * kAudioOffsetUnit, 0.0, span)));
  p.gain = std::clamp(theta[1] * kAudioLevelUnit, 0.0, level_max);
  return p;
}

double audio_gain_for_level(double level, const Tensor& snippet, const Tensor& host) {
  const auto rms = [](const Tensor& t) {
    double sum = 0.0;
    for (double v : t.data()) sum += v * v;
    return std::sqrt(sum / static_cast<double>(t.size()));
  };
  const double s = rms(snippet);
  return s > 0.0 ? level * rms(host) / s : 0.0;
}

AttackResult run_audio_attack(const nets::Network& classifier, const nets::Network& generator,
                              const nets::Network& discriminator, const Tensor& host,
                              const std::vector<Tensor>& references, const AttackConfig& config) {
  check_config(classifier, generator, host, references, config);
  const std::size_t length = generator.output_shape().at(1);
  const std::size_t n = host.dim(1);
  if (length > n) throw std::invalid_argument("generated snippet is longer than the host");

  Domain domain;
  domain.composite = [&host](Graph& g, const Tensor& snippet, const Placement& p) {
    return overlay::apply_audio(g, snippet, host, std::get<overlay::AudioPlacement>(p));
  };
  domain.resolve = [&host](const Tensor& snippet, const Placement& p) -> Placement {
    overlay::AudioPlacement a = std::get<overlay::AudioPlacement>(p);
    a.gain = audio_gain_for_level(a.gain, snippet, host);
    return a;
  };
  std::optional<pepg::PepgState> state;
  std::vector<std::vector<double>> epsilons;
  if (config.method == Method::pepg) {
    state = audio_placement_state(length, n, config);
    const double level_max = config.audio_level_max;
    domain.draw = [&state, &epsilons, length, n, level_max](Rng& rng, std::size_t m) {
      pepg::SampleBatch batch = pepg::pepg_sample(*state, m, rng);
      epsilons = std::move(batch.epsilons);
      std::vector<Placement> out;
      for (const auto& t : batch.thetas) out.emplace_back(to_audio_placement(t, length, n, level_max));
      return out;
    };
    domain.feedback = [&state, &epsilons](const std::vector<double>& rewards) {
      *state = pepg::pepg_update(std::move(*state), pepg::RewardBatch{epsilons, rewards});
    };
  } else {
    if (!(config.audio_level >= 0.0)) throw std::invalid_argument("audio level must be non-negative");
    const double level = config.audio_level;
    domain.draw = [length, n, level](Rng& rng, std::size_t m) {
      std::uniform_int_distribution<std::size_t> offset(0, n - length);
      std::vector<Placement> out;
      for (std::size_t i = 0; i < m; ++i) out.emplace_back(overlay::AudioPlacement{offset(rng), level});
      return out;
    };
  }
  return run_loop(classifier, generator, discriminator, references, config, domain, state);
}

Tensor recomposite(const AdversarialRecord& record, const Tensor& base) {
  if (const auto* t = std::get_if<overlay::PlacementParams>(&record.placement)) {
    return overlay::apply_patch(record.patch, base, *t);
  }
  return overlay::apply_audio(record.patch, base, std::get<overlay::AudioPlacement>(record.placement));
}

}  // namespace madv::attack
