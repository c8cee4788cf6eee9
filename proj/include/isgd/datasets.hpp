#pragma once

#include "isgd/losses.hpp"
#include "isgd/nn.hpp"
#include "isgd/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace isgd {

/// N samples: inputs is N x d, targets has N entries.
struct Dataset {
    Matrix inputs;
    Targets targets;
    /// Image geometry when loaded from IDX (0 otherwise).
    std::size_t image_rows = 0;
    std::size_t image_cols = 0;

    std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
    std::size_t features() const { return static_cast<std::size_t>(inputs.cols()); }
    /// Number of classes (max label + 1) for class-index targets, else 0.
    std::size_t num_classes() const;

    Matrix rows(std::span<const std::size_t> indices) const;
    Dataset subset(std::span<const std::size_t> indices) const;
    /// First `count` samples (or all if fewer).
    Dataset head(std::size_t count) const;
};

/// IDX image + label files. Pixels are scaled by 1/255.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
/// Inverse of load_idx for datasets with image geometry and class labels.
void write_idx(const Dataset& data, const std::filesystem::path& images, const std::filesystem::path& labels);

struct CsvOptions {
    /// Trailing columns holding the target.
    std::size_t target_columns = 1;
    /// Read a single target column as class indices.
    bool classification = true;
    /// Standardize each feature column to zero mean, unit variance.
    bool standardize = false;
};

/// Header row, then numeric cells.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// K Gaussian blobs in d dimensions; class means drawn from N(0, 1) per
/// coordinate, points at mean + spread * N(0, I).
Dataset synth_blobs(std::size_t classes, std::size_t per_class, std::size_t dims, double spread,
                    std::uint64_t seed);

struct LinearProblem {
    Dataset data;
    /// Least-squares optimum of `data` from the normal equations (1 x d).
    Matrix optimum;
    Matrix generating_weights;
};

/// y = w^T x + noise * e, without intercept. Each row is a standard normal
/// vector times a per-sample scale exp(N(0, 0.5^2)), so per-sample gradient
/// norms differ across samples.
LinearProblem synth_linreg(std::size_t count, std::size_t dims, double noise, std::uint64_t seed);

/// `count` distinct indices from [0, n), uniformly without replacement.
std::vector<std::size_t> uniform_batch(std::size_t n, std::size_t count, Rng& rng);

}  // namespace isgd
