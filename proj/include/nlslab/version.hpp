#ifndef NLSLAB_VERSION_HPP_
#define NLSLAB_VERSION_HPP_

namespace nlslab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace nlslab

#endif  // NLSLAB_VERSION_HPP_
