#include "factopt/problems.hpp"

#include <cmath>
#include <stdexcept>

#include "factopt/rng.hpp"

namespace factopt {

namespace {

// log(1 + exp(z)) without overflow for large |z|.
double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

DenseVector seeded_normals(Rng& rng, std::size_t n) {
  DenseVector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = rng.next_normal();
  return v;
}

DenseMatrix seeded_normal_matrix(Rng& rng, std::size_t rows, std::size_t cols,
                                 double scale) {
  DenseMatrix m(rows, cols);
  for (double& x : m.flat()) x = scale * rng.next_normal();
  return m;
}

class QuadraticBowl final : public Problem {
 public:
  QuadraticBowl(std::size_t n, double condition, double noise_scale,
                std::uint64_t seed, double init_rms)
      : Problem("quad", {}, 0.0),
        eigenvalues_(n),
        noise_scale_(noise_scale),
        seed_(seed) {
    if (n < 1 || condition < 1.0)
      throw std::invalid_argument("quad: need n >= 1 and condition >= 1");
    for (std::size_t i = 0; i < n; ++i)
      eigenvalues_[i] =
          n == 1 ? 1.0
                 : std::pow(condition, static_cast<double>(i) /
                                           static_cast<double>(n - 1));
    Rng init = Rng::for_step(seed, 0);
    DenseVector x0 = seeded_normals(init, n);
    const double r = rms(x0);
    if (r == 0.0) throw std::logic_error("quad: degenerate init draw");
    for (std::size_t i = 0; i < n; ++i) x0[i] *= init_rms / r;
    slots_.emplace_back("x", std::move(x0));
  }

  Evaluation evaluate(const std::vector<ParamSlot>& slots,
                      std::int64_t step) const override {
    const auto& x = std::get<DenseVector>(slots.at(0).value());
    DenseVector g(x.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      g[i] = eigenvalues_[i] * x[i];
      loss += 0.5 * eigenvalues_[i] * x[i] * x[i];
    }
    if (noise_scale_ > 0.0) {
      Rng rng = Rng::for_step(seed_, static_cast<std::uint64_t>(step));
      for (std::size_t i = 0; i < g.size(); ++i)
        g[i] += noise_scale_ * rng.next_normal();
    }
    return {loss, {TensorValue(std::move(g))}};
  }

  double full_loss(const std::vector<ParamSlot>& slots) const override {
    const auto& x = std::get<DenseVector>(slots.at(0).value());
    double loss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      loss += 0.5 * eigenvalues_[i] * x[i] * x[i];
    return loss;
  }

 private:
  DenseVector eigenvalues_;
  double noise_scale_;
  std::uint64_t seed_;
};

class LogisticRegression final : public Problem {
 public:
  LogisticRegression(std::size_t features, std::size_t examples, std::size_t batch,
                     std::uint64_t seed, std::size_t classes)
      : Problem("logreg", {}),
        x_(examples, features),
        labels_(examples),
        batch_(batch),
        classes_(classes),
        seed_(seed) {
    if (features == 0 || examples == 0 || batch == 0 || batch > examples)
      throw std::invalid_argument("logreg: bad sizes");
    if (classes < 2) throw std::invalid_argument("logreg: need >= 2 classes");

    Rng init = Rng::for_step(seed, 0);
    if (classes == 2) {
      DenseVector w_star = seeded_normals(init, features);
      const double norm = std::sqrt(kernelsum(w_star));
      for (std::size_t j = 0; j < features; ++j) w_star[j] /= norm;
      for (std::size_t i = 0; i < examples; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < features; ++j) {
          x_(i, j) = init.next_normal();
          dot += x_(i, j) * w_star[j];
        }
        const double y = dot >= 0.0 ? 1.0 : -1.0;
        labels_[i] = y > 0 ? 1 : 0;
        // Push each point margin-deep into its half-space.
        for (std::size_t j = 0; j < features; ++j) x_(i, j) += 0.5 * y * w_star[j];
      }
      slots_.emplace_back("w", DenseVector(features));
    } else {
      DenseMatrix centroids(classes, features);
      for (double& v : centroids.flat()) v = init.next_normal();
      for (std::size_t i = 0; i < examples; ++i) {
        const std::size_t c = i % classes;
        labels_[i] = static_cast<int>(c);
        for (std::size_t j = 0; j < features; ++j)
          x_(i, j) = 2.0 * centroids(c, j) + init.next_normal();
      }
      slots_.emplace_back("w", DenseMatrix(classes, features));
    }
  }

  Evaluation evaluate(const std::vector<ParamSlot>& slots,
                      std::int64_t step) const override {
    Rng rng = Rng::for_step(seed_, static_cast<std::uint64_t>(step));
    std::vector<std::size_t> idx(batch_);
    for (std::size_t k = 0; k < batch_; ++k)
      idx[k] = static_cast<std::size_t>(rng.next_index(x_.rows()));
    return loss_on(slots, idx);
  }

  double full_loss(const std::vector<ParamSlot>& slots) const override {
    std::vector<std::size_t> idx(x_.rows());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return loss_on(slots, idx).loss;
  }

 private:
  static double kernelsum(const DenseVector& v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) acc += v[i] * v[i];
    return acc;
  }

  Evaluation loss_on(const std::vector<ParamSlot>& slots,
                     const std::vector<std::size_t>& idx) const {
    const std::size_t features = x_.cols();
    const double inv_b = 1.0 / static_cast<double>(idx.size());
    if (classes_ == 2) {
      const auto& w = std::get<DenseVector>(slots.at(0).value());
      DenseVector g(features);
      double loss = 0.0;
      for (std::size_t i : idx) {
        double z = 0.0;
        for (std::size_t j = 0; j < features; ++j) z += w[j] * x_(i, j);
        const double y = labels_[i] ? 1.0 : -1.0;
        loss += softplus(-y * z) * inv_b;
        const double coef = -y / (1.0 + std::exp(y * z)) * inv_b;
        for (std::size_t j = 0; j < features; ++j) g[j] += coef * x_(i, j);
      }
      return {loss, {TensorValue(std::move(g))}};
    }
    const auto& w = std::get<DenseMatrix>(slots.at(0).value());
    DenseMatrix g(classes_, features);
    double loss = 0.0;
    std::vector<double> logits(classes_);
    for (std::size_t i : idx) {
      double maxv = -1e300;
      for (std::size_t c = 0; c < classes_; ++c) {
        double z = 0.0;
        for (std::size_t j = 0; j < features; ++j) z += w(c, j) * x_(i, j);
        logits[c] = z;
        maxv = std::max(maxv, z);
      }
      double denom = 0.0;
      for (std::size_t c = 0; c < classes_; ++c) {
        logits[c] = std::exp(logits[c] - maxv);
        denom += logits[c];
      }
      const std::size_t target = static_cast<std::size_t>(labels_[i]);
      loss += -std::log(logits[target] / denom) * inv_b;
      for (std::size_t c = 0; c < classes_; ++c) {
        const double p = logits[c] / denom;
        const double coef = (p - (c == target ? 1.0 : 0.0)) * inv_b;
        for (std::size_t j = 0; j < features; ++j) g(c, j) += coef * x_(i, j);
      }
    }
    return {loss, {TensorValue(std::move(g))}};
  }

  DenseMatrix x_;
  std::vector<int> labels_;
  std::size_t batch_;
  std::size_t classes_;
  std::uint64_t seed_;
};

class TwoLayerNet final : public Problem {
 public:
  TwoLayerNet(std::size_t d_in, std::size_t d_hidden, std::size_t d_out,
              std::uint64_t seed, std::size_t examples, double target_noise,
              double input_scale)
      : Problem("mlp", {}), x_(examples, d_in), y_(examples, d_out) {
    if (d_in < 1 || d_hidden < 1 || d_out < 1 || examples < 1)
      throw std::invalid_argument("mlp: bad sizes");
    Rng init = Rng::for_step(seed, 0);

    for (double& v : x_.flat()) v = input_scale * init.next_normal();
    const DenseMatrix wt1 =
        seeded_normal_matrix(init, d_hidden, d_in, 1.0 / std::sqrt(double(d_in)));
    DenseVector bt1 = seeded_normals(init, d_hidden);
    for (std::size_t i = 0; i < d_hidden; ++i) bt1[i] *= 0.1;
    const DenseMatrix wt2 =
        seeded_normal_matrix(init, d_out, d_hidden, 1.0 / std::sqrt(double(d_hidden)));
    for (std::size_t i = 0; i < examples; ++i)
      for (std::size_t o = 0; o < d_out; ++o) {
        double acc = 0.0;
        for (std::size_t h = 0; h < d_hidden; ++h) {
          double pre = bt1[h];
          for (std::size_t j = 0; j < d_in; ++j) pre += wt1(h, j) * x_(i, j);
          acc += wt2(o, h) * std::tanh(pre);
        }
        y_(i, o) = acc + target_noise * init.next_normal();
      }

    slots_.emplace_back("W1", seeded_normal_matrix(init, d_hidden, d_in,
                                                   1.0 / std::sqrt(double(d_in))));
    slots_.emplace_back("b1", DenseVector(d_hidden));
    slots_.emplace_back("W2", seeded_normal_matrix(init, d_out, d_hidden,
                                                   1.0 / std::sqrt(double(d_hidden))));
  }

  Evaluation evaluate(const std::vector<ParamSlot>& slots,
                      std::int64_t /*step*/) const override {
    const auto& w1 = std::get<DenseMatrix>(slots.at(0).value());
    const auto& b1 = std::get<DenseVector>(slots.at(1).value());
    const auto& w2 = std::get<DenseMatrix>(slots.at(2).value());
    const std::size_t n = x_.rows(), d_in = x_.cols();
    const std::size_t dh = w1.rows(), d_out = w2.rows();
    const double inv_n = 1.0 / static_cast<double>(n);

    DenseMatrix g1(dh, d_in), g2(d_out, dh);
    DenseVector gb(dh);
    DenseMatrix h(n, dh);
    double loss = 0.0;
    std::vector<double> delta_out(d_out), delta_h(dh);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < dh; ++k) {
        double pre = b1[k];
        for (std::size_t j = 0; j < d_in; ++j) pre += w1(k, j) * x_(i, j);
        h(i, k) = std::tanh(pre);
      }
      for (std::size_t o = 0; o < d_out; ++o) {
        double pred = 0.0;
        for (std::size_t k = 0; k < dh; ++k) pred += w2(o, k) * h(i, k);
        const double diff = pred - y_(i, o);
        loss += 0.5 * diff * diff * inv_n;
        delta_out[o] = diff * inv_n;
      }
      for (std::size_t k = 0; k < dh; ++k) {
        double back = 0.0;
        for (std::size_t o = 0; o < d_out; ++o) {
          back += delta_out[o] * w2(o, k);
          g2(o, k) += delta_out[o] * h(i, k);
        }
        delta_h[k] = back * (1.0 - h(i, k) * h(i, k));
        gb[k] += delta_h[k];
        for (std::size_t j = 0; j < d_in; ++j) g1(k, j) += delta_h[k] * x_(i, j);
      }
    }
    Evaluation ev;
    ev.loss = loss;
    ev.grads.emplace_back(std::move(g1));
    ev.grads.emplace_back(std::move(gb));
    ev.grads.emplace_back(std::move(g2));
    return ev;
  }

 private:
  DenseMatrix x_;
  DenseMatrix y_;
};

class EmbeddingScale final : public Problem {
 public:
  EmbeddingScale(std::size_t d_model, EmbeddingVariant variant, std::uint64_t seed,
                 std::size_t vocab, std::size_t batch)
      : Problem("embed-scale", {}), vocab_(vocab), batch_(batch), seed_(seed) {
    if (d_model < 4) throw std::invalid_argument("embed-scale: need d_model >= 4");
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d_model));
    switch (variant) {
      case EmbeddingVariant::Scaled:
        sigma_ = inv_sqrt_d;
        multiplier_ = std::sqrt(static_cast<double>(d_model));
        break;
      case EmbeddingVariant::UnitInit:
        sigma_ = 1.0;
        multiplier_ = 1.0;
        break;
      case EmbeddingVariant::SmallInit:
        sigma_ = inv_sqrt_d;
        multiplier_ = 1.0;
        break;
    }
    // One shared draw order so every variant sees the same raw values.
    Rng init = Rng::for_step(seed, 0);
    slots_.emplace_back("embedding",
                        seeded_normal_matrix(init, vocab, d_model, sigma_));
    slots_.emplace_back("softmax_w",
                        seeded_normal_matrix(init, vocab, d_model, inv_sqrt_d));
  }

  Evaluation evaluate(const std::vector<ParamSlot>& slots,
                      std::int64_t step) const override {
    Rng rng = Rng::for_step(seed_, static_cast<std::uint64_t>(step));
    std::vector<std::size_t> toks(batch_);
    for (auto& tk : toks) tk = static_cast<std::size_t>(rng.next_index(vocab_));
    return loss_on(slots, toks);
  }

  double full_loss(const std::vector<ParamSlot>& slots) const override {
    std::vector<std::size_t> toks(vocab_);
    for (std::size_t i = 0; i < vocab_; ++i) toks[i] = i;
    return loss_on(slots, toks).loss;
  }

 private:
  Evaluation loss_on(const std::vector<ParamSlot>& slots,
                     const std::vector<std::size_t>& toks) const {
    const auto& emb = std::get<DenseMatrix>(slots.at(0).value());
    const auto& w = std::get<DenseMatrix>(slots.at(1).value());
    const std::size_t d = emb.cols();
    const double inv_b = 1.0 / static_cast<double>(toks.size());

    DenseMatrix g_emb(emb.rows(), d), g_w(w.rows(), d);
    std::vector<double> logits(vocab_), e(d);
    double loss = 0.0;
    for (std::size_t tok : toks) {
      const std::size_t target = (tok + 1) % vocab_;
      for (std::size_t j = 0; j < d; ++j) e[j] = multiplier_ * emb(tok, j);
      double maxv = -1e300;
      for (std::size_t c = 0; c < vocab_; ++c) {
        double z = 0.0;
        for (std::size_t j = 0; j < d; ++j) z += w(c, j) * e[j];
        logits[c] = z;
        maxv = std::max(maxv, z);
      }
      double denom = 0.0;
      for (std::size_t c = 0; c < vocab_; ++c) {
        logits[c] = std::exp(logits[c] - maxv);
        denom += logits[c];
      }
      loss += -std::log(logits[target] / denom) * inv_b;
      for (std::size_t c = 0; c < vocab_; ++c) {
        const double coef = (logits[c] / denom - (c == target ? 1.0 : 0.0)) * inv_b;
        for (std::size_t j = 0; j < d; ++j) {
          g_w(c, j) += coef * e[j];
          g_emb(tok, j) += coef * multiplier_ * w(c, j);
        }
      }
    }
    Evaluation ev;
    ev.loss = loss;
    ev.grads.emplace_back(std::move(g_emb));
    ev.grads.emplace_back(std::move(g_w));
    return ev;
  }

  std::size_t vocab_;
  std::size_t batch_;
  std::uint64_t seed_;
  double sigma_ = 1.0;
  double multiplier_ = 1.0;
};

class ScaleJumpStream final : public GradientStream {
 public:
  ScaleJumpStream(std::int64_t t_jump, double low, double high, std::size_t rows,
                  std::size_t cols)
      : t_jump_(t_jump), low_(low), high_(high), rows_(rows), cols_(cols) {
    if (t_jump < 1 || low <= 0.0 || high <= 0.0)
      throw std::invalid_argument("scale-jump: need t_jump >= 1 and magnitudes > 0");
  }

  TensorValue at(std::int64_t step) const override {
    return DenseMatrix(rows_, cols_, step <= t_jump_ ? low_ : high_);
  }

 private:
  std::int64_t t_jump_;
  double low_, high_;
  std::size_t rows_, cols_;
};

class StreamProblem final : public Problem {
 public:
  StreamProblem(std::string name, std::shared_ptr<GradientStream> stream,
                std::size_t rows, std::size_t cols)
      : Problem(std::move(name),
                {ParamSlot("w", DenseMatrix(rows, cols))}),
        stream_(std::move(stream)) {}

  Evaluation evaluate(const std::vector<ParamSlot>&,
                      std::int64_t step) const override {
    // Streams carry no objective; the loss column reads 0.
    return {0.0, {stream_->at(step)}};
  }

 private:
  std::shared_ptr<GradientStream> stream_;
};

}  // namespace

double Problem::full_loss(const std::vector<ParamSlot>& slots) const {
  return evaluate(slots, 1).loss;
}

std::unique_ptr<Problem> make_quadratic_bowl(std::size_t n, double condition,
                                             double noise_scale, std::uint64_t seed,
                                             double init_rms) {
  return std::make_unique<QuadraticBowl>(n, condition, noise_scale, seed, init_rms);
}

std::unique_ptr<Problem> make_logistic_regression(std::size_t features,
                                                  std::size_t examples,
                                                  std::size_t batch,
                                                  std::uint64_t seed,
                                                  std::size_t classes) {
  return std::make_unique<LogisticRegression>(features, examples, batch, seed, classes);
}

std::unique_ptr<Problem> make_two_layer_net(std::size_t d_in, std::size_t d_hidden,
                                            std::size_t d_out, std::uint64_t seed,
                                            std::size_t examples, double target_noise,
                                            double input_scale) {
  return std::make_unique<TwoLayerNet>(d_in, d_hidden, d_out, seed, examples,
                                       target_noise, input_scale);
}

std::unique_ptr<Problem> make_embedding_scale(std::size_t d_model,
                                              EmbeddingVariant variant,
                                              std::uint64_t seed, std::size_t vocab,
                                              std::size_t batch) {
  return std::make_unique<EmbeddingScale>(d_model, variant, seed, vocab, batch);
}

std::unique_ptr<GradientStream> make_scale_jump_stream(std::int64_t t_jump,
                                                       double low_mag, double high_mag,
                                                       std::size_t rows,
                                                       std::size_t cols) {
  return std::make_unique<ScaleJumpStream>(t_jump, low_mag, high_mag, rows, cols);
}

std::unique_ptr<Problem> make_stream_problem(std::string name,
                                             std::shared_ptr<GradientStream> stream,
                                             std::size_t rows, std::size_t cols) {
  return std::make_unique<StreamProblem>(std::move(name), std::move(stream), rows, cols);
}

}  // namespace factopt
