#include "pdnscan/rf_core.hpp"

#include <cmath>
#include <utility>

#include "pdnscan/util.hpp"

namespace pdnscan {

FrequencyGrid::FrequencyGrid(std::vector<double> points_hz) : points_(std::move(points_hz)) {
    if (points_.empty()) throw InvalidGrid("frequency grid is empty");
    double prev = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const double f = points_[i];
        if (!std::isfinite(f) || f <= 0.0)
            throw InvalidGrid("frequency grid point " + std::to_string(i) +
                              " is not a positive finite value");
        if (f <= prev)
            throw InvalidGrid("frequency grid is not strictly increasing at point " +
                              std::to_string(i) + " (" + format_double(f) + " Hz)");
        prev = f;
    }
}

FrequencyGrid FrequencyGrid::linear(double f_start_hz, double f_stop_hz, std::size_t n_points) {
    if (n_points < 2) throw InvalidGrid("linear grid needs at least 2 points");
    if (!(f_start_hz < f_stop_hz))
        throw InvalidGrid("linear grid needs f_start < f_stop");
    std::vector<double> pts(n_points);
    const double span = f_stop_hz - f_start_hz;
    for (std::size_t i = 0; i < n_points; ++i)
        pts[i] = f_start_hz + span * static_cast<double>(i) / static_cast<double>(n_points - 1);
    pts.back() = f_stop_hz; // endpoint exact
    return FrequencyGrid(std::move(pts));
}

ReferenceImpedance::ReferenceImpedance(double ohms) : z0_ohms(ohms) {
    if (!(std::isfinite(ohms) && ohms > 0.0))
        throw InvalidTrace("reference impedance must be > 0 ohms");
}

ComplexTrace::ComplexTrace(FrequencyGrid grid, std::vector<Complex> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size())
        throw InvalidTrace("trace has " + std::to_string(values_.size()) + " values for " +
                           std::to_string(grid_.size()) + " grid points");
}

MagnitudeTrace::MagnitudeTrace(FrequencyGrid grid, std::vector<double> values_db)
    : grid_(std::move(grid)), values_db_(std::move(values_db)) {
    if (values_db_.size() != grid_.size())
        throw InvalidTrace("magnitude trace has " + std::to_string(values_db_.size()) +
                           " values for " + std::to_string(grid_.size()) + " grid points");
    for (std::size_t i = 0; i < values_db_.size(); ++i)
        if (!std::isfinite(values_db_[i]))
            throw InvalidTrace("magnitude trace value at point " + std::to_string(i) +
                               " is not finite");
}

Complex impedance_from_s11(Complex s11, ReferenceImpedance z0, double pole_epsilon) {
    const Complex denom = Complex(1.0, 0.0) - s11;
    if (std::abs(denom) < pole_epsilon)
        throw PoleAtOpen("s11 too close to 1+0j (open circuit), |1-s11| = " +
                         format_double(std::abs(denom)));
    return z0.z0_ohms * (Complex(1.0, 0.0) + s11) / denom;
}

Complex s11_from_impedance(Complex z, ReferenceImpedance z0, double pole_epsilon) {
    const Complex denom = z + Complex(z0.z0_ohms, 0.0);
    if (std::abs(denom) < pole_epsilon)
        throw PoleAtNegativeZ0("impedance too close to -z0, |z+z0| = " +
                               format_double(std::abs(denom)));
    return (z - Complex(z0.z0_ohms, 0.0)) / denom;
}

MagnitudeTrace magnitude_db(const ComplexTrace& trace) {
    std::vector<double> db(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double mag = std::abs(trace.values()[i]);
        if (mag == 0.0)
            throw ZeroMagnitude("zero magnitude at point " + std::to_string(i) + " (" +
                                format_double(trace.grid()[i]) + " Hz)");
        db[i] = 20.0 * std::log10(mag);
    }
    return MagnitudeTrace(trace.grid(), std::move(db));
}

ComplexTrace convert_trace(const ComplexTrace& trace, ConvertDirection direction,
                           ReferenceImpedance z0, double pole_epsilon) {
    std::vector<Complex> out(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        try {
            out[i] = direction == ConvertDirection::s11_to_z
                         ? impedance_from_s11(trace.values()[i], z0, pole_epsilon)
                         : s11_from_impedance(trace.values()[i], z0, pole_epsilon);
        } catch (const PoleAtOpen& e) {
            throw PoleAtOpen("at point index " + std::to_string(i) + " (" +
                             format_double(trace.grid()[i]) + " Hz): " + e.what());
        } catch (const PoleAtNegativeZ0& e) {
            throw PoleAtNegativeZ0("at point index " + std::to_string(i) + " (" +
                                   format_double(trace.grid()[i]) + " Hz): " + e.what());
        }
    }
    return ComplexTrace(trace.grid(), std::move(out));
}

} // namespace pdnscan
