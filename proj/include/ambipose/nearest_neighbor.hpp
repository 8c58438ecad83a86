#pragma once

#include <cstddef>
#include <memory>
#include <span>

#include "ambipose/liegroups.hpp"

namespace ambipose {

/// Static exact nearest-neighbor index over 3D points.
class NearestNeighborIndex {
 public:
  struct Hit {
    std::size_t index = 0;
    double distance = 0.0;
  };

  explicit NearestNeighborIndex(std::span<const Vector3> points);
  ~NearestNeighborIndex();
  NearestNeighborIndex(NearestNeighborIndex&&) noexcept;
  NearestNeighborIndex& operator=(NearestNeighborIndex&&) noexcept;

  /// Requires a non-empty index.
  Hit nearest(const Vector3& query) const;
  std::size_t size() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ambipose
