#ifndef TNRD_TRAINING_HPP
#define TNRD_TRAINING_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tnrd/diffusion.hpp"
#include "tnrd/lbfgs.hpp"

namespace tnrd {

/// Observation plus ground truth; for SISR f is the low-res image, for
/// deblocking f is the decoded (quantization-consistent) image.
struct TrainingSample {
    Image f;
    Image u_gt;
};

enum class TrainScheme { greedy, joint, greedy_then_joint };

struct TrainConfig {
    TrainScheme scheme = TrainScheme::greedy_then_joint;
    int lbfgs_iters = 200;
    int lbfgs_memory = 10;
    uint64_t seed = 0;
    int parallel_workers = 0;  // 0 = hardware concurrency
    LbfgsLogFn log;            // per-iteration progress line hook
    std::function<void(const std::string&)> phase_log;  // per-phase banner hook
};

/// Flat parameter packing. Per stage, in order: lambda_raw, then all omega_i
/// concatenated, then all w_i concatenated.
struct ParamLayout {
    int stages = 0;
    int filters = 0;
    int omega_dim = 0;
    int w_dim = 0;

    size_t stage_size() const {
        return 1 + static_cast<size_t>(filters) * (omega_dim + w_dim);
    }
    size_t total_size() const { return static_cast<size_t>(stages) * stage_size(); }
};

std::vector<double> pack_params(const std::vector<StageParams>& stages, const ParamLayout& layout);
std::vector<StageParams> unpack_params(const std::vector<double>& x, const ParamLayout& layout);

/// Quadratic training loss 1/2 ||u_out - u_gt||^2 on the unpadded canvas.
double loss(const Image& u_out, const Image& u_gt);

struct StageGrad {
    double lambda_raw = 0.0;
    std::vector<std::vector<double>> omega;  // per filter
    std::vector<std::vector<double>> w;      // per filter

    void accumulate(const StageGrad& other);
};

struct StageBackwardResult {
    Image grad_u_prev;
    StageGrad grad_params;
};

/// Adjoint of stage_forward: given dL/du_t, produces dL/du_{t-1} and the
/// gradients for lambda_raw, every omega_i and every w_i. If trace is null
/// the forward intermediates are recomputed.
StageBackwardResult stage_backward(const Image& u_prev, const Image& f, const StageParams& s,
                                   const ProblemKind& problem, const DctBasis& basis,
                                   const RbfSpec& rbf, int pad_border, const Image& grad_out,
                                   BoundaryRule boundary = BoundaryRule::symmetric,
                                   const QuantBox* box = nullptr,
                                   const StageTrace* trace = nullptr);

/// Objective over a training set for either the greedy stage-t problem
/// (frozen predecessor stages precomputed once at construction) or the joint
/// problem over all stages. Deterministic: per-sample gradients are reduced
/// in sample order regardless of worker count.
class TrainObjective {
public:
    // stage_index < 0 selects the joint scope over all of skeleton's stages.
    TrainObjective(const Model& skeleton, const std::vector<TrainingSample>& samples,
                   int stage_index, int workers);

    ParamLayout layout() const { return layout_; }
    double operator()(const std::vector<double>& params, std::vector<double>& grad) const;

private:
    Model skeleton_;
    ParamLayout layout_;
    int stage_index_;
    int workers_;
    std::vector<Image> inputs_;        // padded u_init per sample
    std::vector<Image> observations_;  // f in the form stages consume
    std::vector<Image> gts_;
    std::vector<QuantBox> boxes_;      // deblock only
};

/// Total loss and packed gradient over samples for the given scope
/// (stage_index < 0 = joint). Convenience wrapper over TrainObjective.
double loss_and_gradient(const std::vector<double>& params, const Model& skeleton,
                         const std::vector<TrainingSample>& samples, int stage_index,
                         std::vector<double>& grad, int workers = 1);

/// One-hot DCT filters in zig-zag frequency order, influence weights fitted
/// to the scaled odd rational phi(z) = 2sz/(1+(sz)^2) with s = 1/20, and
/// lambda = 0.1. All stages identical; pad_border = T*(m-1).
Model plain_init(int kernel_size, int filter_count, const RbfSpec& rbf, int stages,
                 const ProblemKind& problem);

/// Central finite differences, one objective pair per coordinate. The
/// independent oracle for every analytic gradient in this module.
std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& objective,
    const std::vector<double>& x, double step);

/// Greedy and/or joint training per config. The skeleton supplies the model
/// configuration and the initial parameters.
Model train(const std::vector<TrainingSample>& samples, Model skeleton, const TrainConfig& config);

struct GradCheckReport {
    bool pass = true;
    double worst_rel = 0.0;
    double worst_abs = 0.0;
    int dim = 0;
    int worst_index = -1;
};

/// Builds a seeded random toy instance of the given problem and compares the
/// packed analytic gradient of TrainObjective against central finite
/// differences; a coordinate passes when |a - fd| <= abs_floor + rel*|fd|.
/// Deblocking instances are resampled until every pre-projection coefficient
/// clears its quantization faces, so the FD probes stay on one smooth piece.
GradCheckReport toy_gradient_check(const ProblemKind& problem, int size, int kernel_size,
                                   int filter_count, int stages, int stage_index, uint64_t seed,
                                   double fd_step = 1e-5, double rel = 1e-5,
                                   double abs_floor = 1e-7);

}  // namespace tnrd

#endif
