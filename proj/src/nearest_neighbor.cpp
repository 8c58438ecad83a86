#include "ambipose/nearest_neighbor.hpp"

#include <utility>
#include <vector>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

#include "ambipose/error.hpp"

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

namespace ambipose {

struct NearestNeighborIndex::Impl {
  using Point = bg::model::point<double, 3, bg::cs::cartesian>;
  using Entry = std::pair<Point, std::size_t>;

  std::vector<Vector3> points;
  bgi::rtree<Entry, bgi::quadratic<16>> tree;
};

NearestNeighborIndex::NearestNeighborIndex(std::span<const Vector3> points)
    : impl_(std::make_unique<Impl>()) {
  impl_->points.assign(points.begin(), points.end());
  std::vector<Impl::Entry> entries;
  entries.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    entries.emplace_back(Impl::Point(points[i].x(), points[i].y(), points[i].z()), i);
  }
  // Packing constructor: bulk-loaded, deterministic layout.
  impl_->tree = decltype(impl_->tree)(entries.begin(), entries.end());
}

NearestNeighborIndex::~NearestNeighborIndex() = default;
NearestNeighborIndex::NearestNeighborIndex(NearestNeighborIndex&&) noexcept = default;
NearestNeighborIndex& NearestNeighborIndex::operator=(NearestNeighborIndex&&) noexcept = default;

NearestNeighborIndex::Hit NearestNeighborIndex::nearest(const Vector3& query) const {
  if (impl_->points.empty()) {
    throw EmptyModel("nearest-neighbor query on an empty index");
  }
  Hit hit;
  bool found = false;
  const Impl::Point q(query.x(), query.y(), query.z());
  for (auto it = impl_->tree.qbegin(bgi::nearest(q, 1)); it != impl_->tree.qend(); ++it) {
    hit.index = it->second;
    found = true;
  }
  if (!found) {
    throw EmptyModel("nearest-neighbor query found nothing");
  }
  hit.distance = (impl_->points[hit.index] - query).norm();
  return hit;
}

std::size_t NearestNeighborIndex::size() const { return impl_->points.size(); }

}  // namespace ambipose
