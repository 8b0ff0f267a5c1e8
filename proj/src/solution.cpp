#include "isac/solution.hpp"

namespace isac {

std::string to_string(Receiver r) { return r == Receiver::TypeI ? "I" : "II"; }

std::string to_string(TargetModel t) { return t == TargetModel::Point ? "point" : "extended"; }

CMat TransmitSolution::total_covariance() const
{
    CMat rx = sense;
    for (const auto& row : info)
        for (const auto& w : row)
            rx += w;
    return rx;
}

}  // namespace isac
