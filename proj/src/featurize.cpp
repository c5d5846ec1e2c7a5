#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cwerm/data.hpp"
#include "cwerm/random.hpp"

namespace cwerm {

const char* to_string(FeaturizerKind kind) {
  switch (kind) {
    case FeaturizerKind::kIdentity: return "identity";
    case FeaturizerKind::kStandardize: return "standardize";
    case FeaturizerKind::kPca: return "pca";
    case FeaturizerKind::kRandomProjection: return "random_projection";
  }
  return "unknown";
}

FeaturizerKind featurizer_kind_from_string(const std::string& name) {
  if (name == "identity") return FeaturizerKind::kIdentity;
  if (name == "standardize") return FeaturizerKind::kStandardize;
  if (name == "pca") return FeaturizerKind::kPca;
  if (name == "random_projection") return FeaturizerKind::kRandomProjection;
  throw invalid_argument("unknown featurizer kind '" + name + "'");
}

namespace {

std::vector<double> column_means(const Matrix& x) {
  std::vector<double> mean(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto r = x.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j) mean[j] += r[j];
  }
  for (auto& m : mean) m /= static_cast<double>(x.rows());
  return mean;
}

}  // namespace

FittedFeaturizer FittedFeaturizer::fit(const LabeledDataset& ds, const FeaturizerSpec& spec) {
  FittedFeaturizer f;
  f.spec_ = spec;
  f.input_dim_ = ds.dim();
  const std::size_t d = ds.dim();
  const Matrix& x = ds.features;

  switch (spec.kind) {
    case FeaturizerKind::kIdentity:
      break;

    case FeaturizerKind::kStandardize: {
      if (x.rows() == 0) throw invalid_argument("cannot standardize an empty dataset");
      f.offset_ = column_means(x);
      f.scale_.assign(d, 0.0);
      for (std::size_t j = 0; j < d; ++j) {
        double ss = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) {
          const double c = x(i, j) - f.offset_[j];
          ss += c * c;
        }
        const double sd = std::sqrt(ss / static_cast<double>(x.rows()));
        // Zero-variance columns collapse to zero.
        f.scale_[j] = sd > 0.0 ? 1.0 / sd : 0.0;
      }
      break;
    }

    case FeaturizerKind::kPca: {
      if (spec.output_dim < 1 || spec.output_dim > d) {
        throw invalid_argument("pca output_dim must be in [1, " + std::to_string(d) + "]");
      }
      if (x.rows() == 0) throw invalid_argument("cannot fit pca on an empty dataset");
      f.offset_ = column_means(x);
      Eigen::MatrixXd centered(x.rows(), d);
      for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          centered(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x(i, j) - f.offset_[j];
        }
      }
      const Eigen::MatrixXd cov = centered.transpose() * centered;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
      if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::kNumerical, "pca eigendecomposition failed");
      }
      // Eigen returns ascending eigenvalues; take them from the top.
      f.projection_ = Matrix(d, spec.output_dim);
      for (std::size_t c = 0; c < spec.output_dim; ++c) {
        const auto col = static_cast<Eigen::Index>(d - 1 - c);
        Eigen::VectorXd v = solver.eigenvectors().col(col);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        for (std::size_t j = 0; j < d; ++j) f.projection_(j, c) = v(static_cast<Eigen::Index>(j));
      }
      break;
    }

    case FeaturizerKind::kRandomProjection: {
      if (spec.output_dim < 1) throw invalid_argument("random_projection output_dim must be >= 1");
      Rng rng(derive_seed(spec.seed, "random-projection"));
      const double sd = 1.0 / std::sqrt(static_cast<double>(spec.output_dim));
      f.projection_ = Matrix(d, spec.output_dim);
      for (auto& v : f.projection_.values()) v = rng.normal(0.0, sd);
      break;
    }
  }
  return f;
}

std::size_t FittedFeaturizer::output_dim() const noexcept {
  return projection_.empty() ? input_dim_ : projection_.cols();
}

Matrix FittedFeaturizer::transform(const Matrix& x) const {
  if (x.cols() != input_dim_) {
    throw dimension_mismatch("featurizer expects " + std::to_string(input_dim_) + " columns, got " +
                             std::to_string(x.cols()));
  }
  switch (spec_.kind) {
    case FeaturizerKind::kIdentity:
      return x;
    case FeaturizerKind::kStandardize: {
      Matrix out(x.rows(), x.cols());
      for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - offset_[j]) * scale_[j];
      }
      return out;
    }
    case FeaturizerKind::kPca:
    case FeaturizerKind::kRandomProjection: {
      const std::size_t k = projection_.cols();
      Matrix out(x.rows(), k);
      std::vector<double> centered(input_dim_);
      for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < input_dim_; ++j) {
          centered[j] = offset_.empty() ? x(i, j) : x(i, j) - offset_[j];
        }
        for (std::size_t c = 0; c < k; ++c) {
          double s = 0.0;
          for (std::size_t j = 0; j < input_dim_; ++j) s += centered[j] * projection_(j, c);
          out(i, c) = s;
        }
      }
      return out;
    }
  }
  return x;
}

LabeledDataset FittedFeaturizer::apply(const LabeledDataset& ds) const {
  LabeledDataset out = ds;
  out.features = transform(ds.features);
  return out;
}

LabeledDataset featurize(const LabeledDataset& ds, const FeaturizerSpec& spec) {
  return FittedFeaturizer::fit(ds, spec).apply(ds);
}

}  // namespace cwerm
