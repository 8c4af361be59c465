#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdnscan {

using Complex = std::complex<double>;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidGrid : Error { using Error::Error; };
struct InvalidTrace : Error { using Error::Error; };
struct GridMismatch : Error { using Error::Error; };
struct PoleAtOpen : Error { using Error::Error; };
struct PoleAtNegativeZ0 : Error { using Error::Error; };
struct ZeroMagnitude : Error { using Error::Error; };

/// Ordered frequency points in Hz: non-empty, strictly increasing, all > 0.
/// Grid equality is exact pointwise equality; there is no tolerance.
class FrequencyGrid {
public:
    explicit FrequencyGrid(std::vector<double> points_hz);

    static FrequencyGrid linear(double f_start_hz, double f_stop_hz, std::size_t n_points);

    const std::vector<double>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    double operator[](std::size_t i) const { return points_[i]; }
    double front() const { return points_.front(); }
    double back() const { return points_.back(); }

    friend bool operator==(const FrequencyGrid&, const FrequencyGrid&) = default;

private:
    std::vector<double> points_;
};

/// Characteristic impedance the reflection coefficient is defined against.
struct ReferenceImpedance {
    double z0_ohms;
    explicit ReferenceImpedance(double ohms = 50.0);
    friend bool operator==(const ReferenceImpedance&, const ReferenceImpedance&) = default;
};

/// Per-frequency complex values: S11 (dimensionless) or impedance (ohms).
class ComplexTrace {
public:
    ComplexTrace(FrequencyGrid grid, std::vector<Complex> values);

    const FrequencyGrid& grid() const { return grid_; }
    const std::vector<Complex>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }

    friend bool operator==(const ComplexTrace&, const ComplexTrace&) = default;

private:
    FrequencyGrid grid_;
    std::vector<Complex> values_;
};

/// Per-frequency magnitude in dB (20*log10 of linear magnitude).
/// Values must be finite: a zero linear magnitude is rejected upstream.
class MagnitudeTrace {
public:
    MagnitudeTrace(FrequencyGrid grid, std::vector<double> values_db);

    const FrequencyGrid& grid() const { return grid_; }
    const std::vector<double>& values_db() const { return values_db_; }
    std::size_t size() const { return values_db_.size(); }

    friend bool operator==(const MagnitudeTrace&, const MagnitudeTrace&) = default;

private:
    FrequencyGrid grid_;
    std::vector<double> values_db_;
};

inline constexpr double kDefaultPoleEpsilon = 1e-12;

// Z = z0 * (1 + s11) / (1 - s11). Throws PoleAtOpen when |1 - s11| < epsilon.
Complex impedance_from_s11(Complex s11, ReferenceImpedance z0,
                           double pole_epsilon = kDefaultPoleEpsilon);

// S11 = (z - z0) / (z + z0). Throws PoleAtNegativeZ0 when |z + z0| < epsilon.
Complex s11_from_impedance(Complex z, ReferenceImpedance z0,
                           double pole_epsilon = kDefaultPoleEpsilon);

MagnitudeTrace magnitude_db(const ComplexTrace& trace);

enum class ConvertDirection { s11_to_z, z_to_s11 };

// Pointwise scalar conversion on the same grid; scalar errors are rethrown
// with the offending point index and frequency in the message.
ComplexTrace convert_trace(const ComplexTrace& trace, ConvertDirection direction,
                           ReferenceImpedance z0,
                           double pole_epsilon = kDefaultPoleEpsilon);

} // namespace pdnscan
