#pragma once

#include <asfkit/asfkit.hpp>

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

namespace asfkit::test_support {

using matrix = std::vector<std::vector<long double>>;

/// Gaussian elimination with partial pivoting in long double. Kept separate
/// from the library's Eigen path so it can serve as an oracle.
inline std::vector<double> dense_solve(matrix a, std::vector<long double> b)
{
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
        if (a[piv][c] == 0.0L) throw std::runtime_error("oracle: singular");
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const long double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    std::vector<long double> xl(n);
    for (std::size_t i = n; i-- > 0;) {
        long double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * xl[k];
        xl[i] = s / a[i][i];
        x[i] = static_cast<double>(xl[i]);
    }
    return x;
}

/// Exponential semivariance written out independently of variogram_model.
inline long double oracle_gamma(double c0, double c1, double a, const vec2& p, const vec2& q)
{
    const long double h = std::hypot(static_cast<long double>(p.x() - q.x()), static_cast<long double>(p.y() - q.y()));
    if (h == 0.0L) return 0.0L;
    return c0 + c1 * (1.0L - std::exp(-h / a));
}

/// Scratch directory removed on destruction.
class temp_dir {
public:
    explicit temp_dir(const std::string& tag)
    {
        path_ = std::filesystem::temp_directory_path() / ("asfkit-test-" + tag + "-" + std::to_string(::getpid()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~temp_dir() { std::filesystem::remove_all(path_); }
    temp_dir(const temp_dir&) = delete;
    temp_dir& operator=(const temp_dir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline survey_track make_track(const std::vector<vec2>& pos, const std::vector<double>& asf, const std::string& tx = "A")
{
    survey_track t;
    t.label = "t";
    for (std::size_t i = 0; i < pos.size(); ++i) {
        survey_measurement m;
        m.t = static_cast<double>(i);
        m.pos = pos[i];
        m.asf[tx] = asf[i];
        t.measurements.push_back(m);
    }
    return t;
}

} // namespace asfkit::test_support
