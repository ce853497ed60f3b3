#include "fsdh/fsdh.hpp"

#include <chrono>

namespace fsdh {

Method parse_method(const std::string& name) {
  if (name == "fsdh") return Method::fsdh;
  if (name == "sdh") return Method::sdh;
  throw PreconditionError("unknown method '" + name + "'");
}

const char* to_string(Method method) {
  return method == Method::fsdh ? "fsdh" : "sdh";
}

void HashModel::validate() const {
  require(kernel.sigma > 0.0, "model: kernel sigma must be positive");
  require(kernel.anchor_count() >= 1, "model: no anchors");
  require(projection.rows() == kernel.anchor_count(),
          "model: projection rows must equal the anchor count");
  require(class_codes.bits() == projection.cols(),
          "model: class code length must equal the projection width");
  require((class_codes.codes.array().abs() == 1).all(),
          "model: class codes must be +-1");
  require(trained_on.dim == kernel.source_dim() &&
              trained_on.class_count == class_codes.classes(),
          "model: fingerprint disagrees with the kernel or class codes");
  if (method == Method::fsdh) {
    require(is_power_of_two(bits()), "model: FSDH code length must be a power of 2");
    require(is_orthogonal_code_set(class_codes),
            "model: FSDH class codes must be pairwise orthogonal");
  }
}

bool HashModel::operator==(const HashModel& other) const {
  return method == other.method && kernel == other.kernel &&
         projection.rows() == other.projection.rows() &&
         projection.cols() == other.projection.cols() &&
         projection == other.projection && class_codes == other.class_codes &&
         lambda == other.lambda && trained_on == other.trained_on;
}

FsdhFit train_fsdh(const Eigen::MatrixXd& features, const LabelArray& labels,
                   int classes, Index bits, const Ridge& ridge,
                   Index hadamard_cap) {
  if (!is_power_of_two(bits) || bits < 2) {
    throw PreconditionError("assumption violated: code length " +
                            std::to_string(bits) + " is not a power of 2");
  }
  if (classes > bits) {
    throw PreconditionError("assumption violated: " + std::to_string(classes) +
                            " classes exceed the code length " +
                            std::to_string(bits));
  }
  require(features.cols() == labels.size(), "features and labels disagree on N");

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  FsdhFit fit;
  fit.class_codes = pick_class_codes(sylvester(bits, hadamard_cap), classes);
  const auto coded = Clock::now();

  // X B^T = (X Y^T) B'^T: sum the features per class, then expand by code.
  Eigen::MatrixXd class_sums = Eigen::MatrixXd::Zero(features.rows(), classes);
  for (Index i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < classes, "label out of range");
    class_sums.col(labels[i]) += features.col(i);
  }
  const Eigen::MatrixXd rhs =
      class_sums * fit.class_codes.codes.transpose().cast<double>();
  fit.projection = ProjectionSolver<double>(features, ridge).solve_rhs(rhs);
  fit.code_seconds = std::chrono::duration<double>(coded - start).count();
  fit.solve_seconds = std::chrono::duration<double>(Clock::now() - coded).count();
  return fit;
}

Eigen::MatrixXd optimal_weights(const ClassCodes& class_codes, double lambda) {
  require(lambda >= 0.0, "lambda must be non-negative");
  return class_codes.codes.cast<double>() / (double(class_codes.bits()) + lambda);
}

PackedCodes encode_features(const Eigen::MatrixXd& projection,
                            const Eigen::MatrixXd& kernel_features) {
  require(projection.rows() == kernel_features.rows(),
          "kernel feature dimension does not match the projection");
  return pack_signs(projection.transpose() * kernel_features);
}

PackedCodes encode(const HashModel& model, const Eigen::MatrixXd& raw_samples) {
  return encode_features(model.projection, transform(model.kernel, raw_samples));
}

}  // namespace fsdh
