#include "isgd/datasets.hpp"

#include "isgd/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

namespace isgd {

std::size_t Dataset::num_classes() const {
    if (!targets.has_classes() || targets.labels().empty()) return 0;
    return *std::max_element(targets.labels().begin(), targets.labels().end()) + 1;
}

Matrix Dataset::rows(std::span<const std::size_t> indices) const {
    Matrix out(static_cast<Eigen::Index>(indices.size()), inputs.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= size()) throw ArgumentError("dataset row out of range");
        out.row(static_cast<Eigen::Index>(i)) = inputs.row(static_cast<Eigen::Index>(indices[i]));
    }
    return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.inputs = rows(indices);
    out.targets = targets.select(indices);
    out.image_rows = image_rows;
    out.image_cols = image_cols;
    return out;
}

Dataset Dataset::head(std::size_t count) const {
    std::vector<std::size_t> idx(std::min(count, size()));
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return subset(idx);
}

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset, const std::filesystem::path& path) {
    if (bytes.size() < offset + 4) throw IoError(path.string() + ": truncated header");
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                                static_cast<char>(v)};
    out.write(b.data(), 4);
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
    const auto img = read_file(images);
    const auto lab = read_file(labels);

    if (read_be32(img, 0, images) != kImageMagic)
        throw FormatError(images.string() + ": bad image magic (expected 0x00000803)");
    if (read_be32(lab, 0, labels) != kLabelMagic)
        throw FormatError(labels.string() + ": bad label magic (expected 0x00000801)");

    const std::size_t count = read_be32(img, 4, images);
    const std::size_t rows = read_be32(img, 8, images);
    const std::size_t cols = read_be32(img, 12, images);
    const std::size_t label_count = read_be32(lab, 4, labels);
    if (count != label_count)
        throw ConsistencyError("image file holds " + std::to_string(count) + " items but label file holds " +
                               std::to_string(label_count));

    const std::size_t pixels = rows * cols;
    if (img.size() < 16 + count * pixels) throw IoError(images.string() + ": truncated pixel payload");
    if (lab.size() < 8 + count) throw IoError(labels.string() + ": truncated label payload");

    Dataset data;
    data.image_rows = rows;
    data.image_cols = cols;
    data.inputs.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t p = 0; p < pixels; ++p)
            data.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) =
                static_cast<double>(img[16 + i * pixels + p]) / 255.0;
    std::vector<std::size_t> y(count);
    for (std::size_t i = 0; i < count; ++i) y[i] = lab[8 + i];
    data.targets = Targets::classes(std::move(y));
    return data;
}

void write_idx(const Dataset& data, const std::filesystem::path& images, const std::filesystem::path& labels) {
    if (data.image_rows * data.image_cols != data.features())
        throw ArgumentError("dataset has no image geometry matching its feature count");
    if (!data.targets.has_classes()) throw ArgumentError("IDX labels need class-index targets");

    std::ofstream img(images, std::ios::binary);
    if (!img) throw IoError("cannot write " + images.string());
    write_be32(img, kImageMagic);
    write_be32(img, static_cast<std::uint32_t>(data.size()));
    write_be32(img, static_cast<std::uint32_t>(data.image_rows));
    write_be32(img, static_cast<std::uint32_t>(data.image_cols));
    for (Eigen::Index i = 0; i < data.inputs.rows(); ++i)
        for (Eigen::Index p = 0; p < data.inputs.cols(); ++p) {
            const double v = std::clamp(std::round(data.inputs(i, p) * 255.0), 0.0, 255.0);
            img.put(static_cast<char>(static_cast<unsigned char>(v)));
        }

    std::ofstream lab(labels, std::ios::binary);
    if (!lab) throw IoError("cannot write " + labels.string());
    write_be32(lab, kLabelMagic);
    write_be32(lab, static_cast<std::uint32_t>(data.size()));
    for (auto y : data.targets.labels()) {
        if (y > 255) throw ArgumentError("IDX labels are single bytes");
        lab.put(static_cast<char>(static_cast<unsigned char>(y)));
    }
    if (!img || !lab) throw IoError("IDX write failed");
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header row");
    const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (options.target_columns == 0 || options.target_columns >= columns)
        throw ArgumentError("target column count must leave at least one feature column");
    if (options.classification && options.target_columns != 1)
        throw ArgumentError("classification CSVs take a single target column");

    std::vector<std::vector<double>> table;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            const auto first = cell.find_first_not_of(" \t");
            const auto last = cell.find_last_not_of(" \t");
            if (first == std::string::npos) throw FormatError(path.string() + ":" + std::to_string(line_no) + ": empty cell");
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(cell.data() + first, cell.data() + last + 1, v);
            if (ec != std::errc() || ptr != cell.data() + last + 1 || !std::isfinite(v))
                throw FormatError(path.string() + ":" + std::to_string(line_no) + ": non-numeric cell '" + cell + "'");
            row.push_back(v);
        }
        if (row.size() != columns)
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                              " cells, found " + std::to_string(row.size()));
        table.push_back(std::move(row));
    }
    if (table.empty()) throw FormatError(path.string() + ": no data rows");

    const std::size_t features = columns - options.target_columns;
    Dataset data;
    data.inputs.resize(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(features));
    Matrix targets(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(options.target_columns));
    for (std::size_t i = 0; i < table.size(); ++i) {
        for (std::size_t c = 0; c < features; ++c)
            data.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = table[i][c];
        for (std::size_t c = 0; c < options.target_columns; ++c)
            targets(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = table[i][features + c];
    }
    if (options.classification) {
        std::vector<std::size_t> labels(table.size());
        for (std::size_t i = 0; i < table.size(); ++i) {
            const double y = targets(static_cast<Eigen::Index>(i), 0);
            if (y < 0.0 || y != std::floor(y)) throw FormatError(path.string() + ": class labels must be non-negative integers");
            labels[i] = static_cast<std::size_t>(y);
        }
        data.targets = Targets::classes(std::move(labels));
    } else {
        data.targets = Targets::values(std::move(targets));
    }
    if (options.standardize) {
        for (Eigen::Index c = 0; c < data.inputs.cols(); ++c) {
            auto col = data.inputs.col(c);
            const double mean = col.mean();
            const double sd = std::sqrt((col.array() - mean).square().mean());
            col.array() -= mean;
            if (sd > 0.0) col /= sd;
        }
    }
    return data;
}

Dataset synth_blobs(std::size_t classes, std::size_t per_class, std::size_t dims, double spread, std::uint64_t seed) {
    if (classes == 0 || per_class == 0 || dims == 0) throw ArgumentError("blob sizes must be positive");
    if (spread < 0.0) throw ArgumentError("spread must be non-negative");
    Rng rng(seed);
    const auto d = static_cast<Eigen::Index>(dims);
    Matrix means(static_cast<Eigen::Index>(classes), d);
    for (Eigen::Index k = 0; k < means.size(); ++k) means.data()[k] = rng.normal();

    Dataset data;
    data.inputs.resize(static_cast<Eigen::Index>(classes * per_class), d);
    std::vector<std::size_t> labels;
    labels.reserve(classes * per_class);
    Eigen::Index row = 0;
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t j = 0; j < per_class; ++j, ++row) {
            for (Eigen::Index k = 0; k < d; ++k)
                data.inputs(row, k) = means(static_cast<Eigen::Index>(c), k) + spread * rng.normal();
            labels.push_back(c);
        }
    data.targets = Targets::classes(std::move(labels));
    return data;
}

LinearProblem synth_linreg(std::size_t count, std::size_t dims, double noise, std::uint64_t seed) {
    if (count == 0 || dims == 0) throw ArgumentError("regression sizes must be positive");
    if (count < dims) throw ArgumentError("need at least as many samples as dimensions");
    Rng rng(seed);
    const auto n = static_cast<Eigen::Index>(count);
    const auto d = static_cast<Eigen::Index>(dims);

    LinearProblem problem;
    problem.generating_weights.resize(1, d);
    for (Eigen::Index k = 0; k < d; ++k) problem.generating_weights(0, k) = rng.normal();

    Matrix x(n, d);
    Matrix y(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double scale = std::exp(0.5 * rng.normal());
        for (Eigen::Index k = 0; k < d; ++k) x(i, k) = scale * rng.normal();
        y(i, 0) = x.row(i).dot(problem.generating_weights.row(0)) + noise * rng.normal();
    }
    const Matrix gram = x.transpose() * x;
    const Matrix rhs = x.transpose() * y;
    problem.optimum = gram.ldlt().solve(rhs).transpose();
    problem.data.inputs = std::move(x);
    problem.data.targets = Targets::values(std::move(y));
    return problem;
}

std::vector<std::size_t> uniform_batch(std::size_t n, std::size_t count, Rng& rng) {
    if (count == 0) throw ArgumentError("batch size must be positive");
    if (count > n) throw ArgumentError("batch of " + std::to_string(count) + " exceeds dataset of " + std::to_string(n));
    // Partial Fisher-Yates over the index range.
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

}  // namespace isgd
