#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace shapespline {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

enum class ErrorCode {
    DegenerateConfiguration,
    CutLocus,
    ZeroDistance,
    VectorTooLong,
    RankDeficient,
    TimeOutOfRange,
    DuplicateTimes,
    TooFewPoints,
    SingularDesign,
    NonConvergence,
    ZeroResidual,
    InvalidArgument,
    ParseError,
    ValidationError,
    IoError,
};

inline std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::CutLocus: return "CutLocus";
    case ErrorCode::ZeroDistance: return "ZeroDistance";
    case ErrorCode::VectorTooLong: return "VectorTooLong";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorCode::DuplicateTimes: return "DuplicateTimes";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::ZeroResidual: return "ZeroResidual";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// All library failures are reported through this type; `code()` says which contract broke.
class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Which quotient the geometry works in. Shape removes scale, size-and-shape keeps it.
enum class Mode { shape, size_and_shape };

inline std::string_view to_string(Mode mode)
{
    return mode == Mode::shape ? "shape" : "size-and-shape";
}

/// Raw landmark coordinates: k rows (landmarks) by m columns (spatial axes).
struct Configuration
{
    Matrix landmarks;
    double time = 0.0;

    int num_landmarks() const { return static_cast<int>(landmarks.rows()); }
    int dimension() const { return static_cast<int>(landmarks.cols()); }
};

inline void validate(const Configuration& c)
{
    if (c.landmarks.cols() < 1 || c.landmarks.rows() <= c.landmarks.cols())
        throw Error(ErrorCode::InvalidArgument, "configuration needs k > m >= 1 (got k=" +
                                                    std::to_string(c.landmarks.rows()) +
                                                    ", m=" + std::to_string(c.landmarks.cols()) + ")");
    if (!c.landmarks.allFinite() || !std::isfinite(c.time))
        throw Error(ErrorCode::InvalidArgument, "configuration has non-finite entries");
}

/// Frobenius inner product tr(A B^T).
inline double inner(const Matrix& a, const Matrix& b)
{
    return (a.array() * b.array()).sum();
}

} // namespace shapespline
