#ifndef TWINBEAM_VERSION_HPP
#define TWINBEAM_VERSION_HPP

namespace twinbeam {
inline constexpr const char* kVersion = "1.0.0";
}

#endif
