#pragma once

#include "stag/types.hpp"

#include <algorithm>

namespace stag {

/// Spatial intersection-over-union. Degenerate (zero-area) boxes never overlap.
template <typename Scalar>
Scalar iou(const BoxT<Scalar>& a, const BoxT<Scalar>& b) {
  const Scalar area_a = a.area();
  const Scalar area_b = b.area();
  if (area_a <= Scalar(0) || area_b <= Scalar(0)) return Scalar(0);
  const Scalar iw = std::min(a.right(), b.right()) - std::max(a.left, b.left);
  const Scalar ih = std::min(a.bottom(), b.bottom()) - std::max(a.top, b.top);
  if (iw <= Scalar(0) || ih <= Scalar(0)) return Scalar(0);
  const Scalar inter = iw * ih;
  return inter / (area_a + area_b - inter);
}

/// Scales width and height by `factor`, keeping the center fixed.
template <typename Scalar>
BoxT<Scalar> enlarge_about_center(const BoxT<Scalar>& box, Scalar factor) {
  const Scalar w = box.width * factor;
  const Scalar h = box.height * factor;
  return {box.center_x() - w / Scalar(2), box.center_y() - h / Scalar(2), w, h};
}

}  // namespace stag
