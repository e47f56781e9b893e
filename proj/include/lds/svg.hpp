#pragma once

#include <complex>
#include <string>
#include <vector>

namespace lds {

/// Line plot of a loss curve on a log10 y-axis.
std::string loss_curve_svg(const std::vector<double>& losses,
                           const std::string& title);

/// Complex-plane scatter of per-iteration eigenvalue estimates with the
/// unit circle for reference. Earlier iterations are drawn with faded
/// opacity; true eigenvalues, when given, are marked as red stars.
std::string eigen_plane_svg(
    const std::vector<std::vector<std::complex<double>>>& trace,
    const std::vector<std::complex<double>>& truth, const std::string& title);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace lds
