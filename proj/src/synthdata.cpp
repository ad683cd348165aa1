#include "ac/synthdata.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "ac/errors.hpp"
#include "ac/rng.hpp"

namespace ac {

namespace {

constexpr double kMinMagnitude = 0.3;
constexpr double kMaxMagnitude = 1.0;
constexpr double kMinLineAngleDeg = 30.0;
constexpr std::size_t kMaxDirectionAttempts = 1000;

std::vector<double> random_unit_vector(Rng& rng, std::size_t d) {
    std::vector<double> v(d);
    double n = 0.0;
    do {
        for (double& x : v) x = rng.gaussian();
        n = 0.0;
        for (double x : v) n += x * x;
        n = std::sqrt(n);
    } while (n < 1e-12);
    for (double& x : v) x /= n;
    return v;
}

}  // namespace

SyntheticDataset generate_clusters(std::size_t k, std::size_t per_cluster, std::size_t d,
                                   double noise_sigma, std::uint64_t seed) {
    if (k < 1) throw ConfigError("cluster count must be at least 1");
    if (d < 2) throw ConfigError("dimension must be at least 2");
    if (per_cluster < 2) throw ConfigError("per_cluster must be at least 2");
    if (!(std::isfinite(noise_sigma) && noise_sigma >= 0.0)) {
        throw ConfigError("noise_sigma must be finite and non-negative");
    }

    Rng rng(seed);
    const double max_abs_cos = std::cos(kMinLineAngleDeg * std::acos(-1.0) / 180.0);

    linalg::Matrix dirs(k, d);
    std::size_t resamples = 0;
    for (std::size_t c = 0; c < k; ++c) {
        while (true) {
            const std::vector<double> cand = random_unit_vector(rng, d);
            bool ok = true;
            for (std::size_t p = 0; p < c && ok; ++p) {
                double dot = 0.0;
                for (std::size_t j = 0; j < d; ++j) dot += cand[j] * dirs(p, j);
                if (std::abs(dot) > max_abs_cos) ok = false;  // lines closer than 30 degrees
            }
            if (ok) {
                for (std::size_t j = 0; j < d; ++j) dirs(c, j) = cand[j];
                break;
            }
            if (++resamples >= kMaxDirectionAttempts) {
                throw DirectionSamplingFailedError(kMaxDirectionAttempts);
            }
        }
    }

    const std::size_t n = k * per_cluster;
    linalg::Matrix points(n, d);
    std::vector<std::size_t> labels(n);
    std::size_t row = 0;
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t p = 0; p < per_cluster; ++p, ++row) {
            const double sign = rng.coin() ? 1.0 : -1.0;
            const double mag = rng.uniform(kMinMagnitude, kMaxMagnitude);
            double sq = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double x = sign * mag * dirs(c, j) + noise_sigma * rng.gaussian();
                points(row, j) = x;
                sq += x * x;
            }
            const double norm = std::sqrt(sq);
            if (norm > 1.0) {
                for (std::size_t j = 0; j < d; ++j) points(row, j) /= norm;
            }
            labels[row] = c;
        }
    }
    return SyntheticDataset{std::move(points), std::move(labels), std::move(dirs), noise_sigma,
                            seed};
}

linalg::Matrix augment_negate(const linalg::Matrix& points, double aug_sigma,
                              std::uint64_t seed) {
    if (!(std::isfinite(aug_sigma) && aug_sigma >= 0.0)) {
        throw ConfigError("aug_sigma must be finite and non-negative");
    }
    Rng rng(seed);
    linalg::Matrix out(points.rows(), points.cols());
    for (std::size_t i = 0; i < points.rows(); ++i)
        for (std::size_t j = 0; j < points.cols(); ++j) {
            out(i, j) = -points(i, j) + aug_sigma * rng.gaussian();
        }
    return out;
}

void write_points_csv(const std::filesystem::path& path, const linalg::Matrix& points,
                      const std::vector<std::size_t>& labels) {
    if (labels.size() != points.rows()) {
        throw DimensionMismatchError("label count does not match point count");
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    for (std::size_t j = 0; j < points.cols(); ++j) out << 'x' << j << ',';
    out << "label\n";
    char buf[64];
    for (std::size_t i = 0; i < points.rows(); ++i) {
        for (std::size_t j = 0; j < points.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", points(i, j));
            out << buf << ',';
        }
        out << labels[i] << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

LabeledPoints read_points_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV: " + path.string());

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.size() < 2 || header.back() != "label") {
        throw IoError("malformed CSV header in " + path.string());
    }
    const std::size_t d = header.size() - 1;
    for (std::size_t j = 0; j < d; ++j) {
        if (header[j] != "x" + std::to_string(j)) {
            throw IoError("malformed CSV header in " + path.string());
        }
    }

    std::vector<double> values;
    std::vector<std::size_t> labels;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                if (col < d) {
                    values.push_back(std::stod(cell));
                } else if (col == d) {
                    labels.push_back(static_cast<std::size_t>(std::stoull(cell)));
                } else {
                    throw IoError("too many columns in row of " + path.string());
                }
            } catch (const std::invalid_argument&) {
                throw IoError("unparseable cell '" + cell + "' in " + path.string());
            } catch (const std::out_of_range&) {
                throw IoError("out-of-range cell '" + cell + "' in " + path.string());
            }
            ++col;
        }
        if (col != d + 1) throw IoError("wrong column count in row of " + path.string());
        ++rows;
    }
    return LabeledPoints{linalg::Matrix(rows, d, std::move(values)), std::move(labels)};
}

}  // namespace ac
