#pragma once

#include "ims/extract.hpp"
#include "ims/spatial.hpp"

namespace ims {

// Transfers a coarse section to a fine vertex pair grid by closest-point
// projection and product FEM interpolation. Only valid for the default
// surface connection, whose fibers are globally trivialized; other
// connections must go through geometricInitialization instead.
Section upsampleSection(const Surface& coarseA, const Surface& coarseB, const Connection& connA0,
                        const Connection& connB0, const Section& Z0, const Surface& fineA,
                        const Surface& fineB);

// Composes coarse correspondences with closest-point projections to produce
// fine vertex-to-face maps for the standard initializer.
std::pair<InputMap, InputMap> geometricInitialization(const Surface& coarseA,
                                                      const Surface& coarseB,
                                                      const Connection& connA0,
                                                      const Connection& connB0, const Section& Z0,
                                                      const Surface& fineA, const Surface& fineB);

// Picks the fine anchor face whose centroid is closest-point contained in the
// coarse anchor face (the multiresolution anchor containment rule).
int fineAnchorForCoarse(const Surface& coarse, int coarseAnchor, const Surface& fine);

} // namespace ims
