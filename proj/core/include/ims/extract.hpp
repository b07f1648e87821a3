#pragma once

#include <vector>

#include "ims/io.hpp"
#include "ims/product.hpp"

namespace ims {

// Rotation of a slice section along each edge relative to parallel transport,
// principal values in [-pi, pi).
struct AngularForm {
  Eigen::VectorXd omega;  // per edge, canonical orientation
};

// Integer zero count per face: (d1 omega + Omega) / 2*pi.
struct IndexForm {
  Eigen::VectorXi ind;
};

// Computes both forms for one slice section on a surface; zero vertex values
// are nudged to 1e-300 and non-integer indices (edge-zero degeneracies) raise
// ExtractionError.
std::pair<AngularForm, IndexForm> sliceIndexForm(const Surface& s, const Connection& conn,
                                                 Eigen::VectorXcd slice);

// Barycentric zero of the in-triangle interpolant on a singular face
// (omega0 sums with Omega0 to +-2*pi). Homotopy from the flat linear
// interpolant with Newton tracking; 32 uniform steps, adaptive halving down
// to 1/1024. Residual is |z(b)| relative to the max corner magnitude.
Eigen::Vector3d findTriangleZero(const Eigen::Vector3d& omega0, double Omega0,
                                 const Eigen::Vector3d& absZ, double* residualOut = nullptr);

struct VertexImage {
  int face = -1;
  Eigen::Vector3d barycentric = Eigen::Vector3d::Zero();
  bool multiZero = false;
  double residual = 0.0;   // relative interpolant residual at the chosen zero
  int indexedFaces = 0;    // number of faces with nonzero index on the slice
};

// Zero of one slice section on `target`. Multiple indexed faces select the
// smallest-residual zero and set multiZero.
VertexImage locateSliceZero(const Surface& target, const Connection& connTarget,
                            const Eigen::VectorXcd& slice);

// Image of vertex vA under the section (row vA as a slice on B).
VertexImage mapVertex(const Surface& B, const Connection& connB, const Section& Z, int vA);

// Image of an arbitrary point of A: the slice is the FEM-weighted combination
// of the three rows at faceA's corners.
VertexImage mapPoint(const Surface& A, const Surface& B, const Connection& connA,
                     const Connection& connB, const Section& Z, int faceA,
                     const Eigen::Vector3d& baryA);

// FEM basis weights of point p = bary inside face f (phase from the Whitney
// form of the connection, integrated in closed form along straight segments).
Eigen::Vector3cd femWeights(const TriangleMesh& mesh, const Connection& conn, int f,
                            const Eigen::Vector3d& bary);

// Zeros of the bilinear interpolant on edge-edge product faces: the overlay
// crossings. Roots with s,t inside [0,1] only.
std::vector<OverlayCrossing> edgeEdgeIntersections(const Surface& A, const Surface& B,
                                                   const Connection& connA,
                                                   const Connection& connB, const Section& Z);

struct CorrespondenceMap {
  std::vector<VertexImage> aToB;  // images on B (solve connectivity)
  std::vector<VertexImage> bToA;
  std::vector<OverlayCrossing> crossings;
  double multiZeroFractionAB = 0.0;
  double multiZeroFractionBA = 0.0;
};

CorrespondenceMap extractCorrespondence(const Surface& A, const Surface& B,
                                        const Connection& connA, const Connection& connB,
                                        const Section& Z, bool withOverlay);

struct DistortionReport {
  Eigen::VectorXd sigma1, sigma2;    // per source face (0 where excluded)
  std::vector<char> flipped;         // image triangle reversed against target normals
  std::vector<char> excluded;        // degenerate image or multi-zero corner
  double areaSource = 0.0;
  double graphArea = 0.0;            // integral of sqrt((1+s1^2)(1+s2^2))
  double symmetricDirichlet = 0.0;   // integral of s1^2+s2^2+s1^-2+s2^-2 over included faces
  double detIntegral = 0.0;          // integral of |det|
  double halfDirichlet = 0.0;        // integral of (s1^2+s2^2)/2
  int nExcluded = 0;
  // sandwich: detIntegral <= graphArea - areaSource <= halfDirichlet
  bool sandwichHolds(double tol = 1e-9) const {
    return detIntegral <= graphArea - areaSource + tol &&
           graphArea - areaSource <= halfDirichlet + tol;
  }
};

// Distortion of the piecewise-linear map sending each source face to the
// triangle of its vertex images (3D points on the target).
DistortionReport distortionReport(const Surface& A, const Eigen::MatrixXd& imagePoints,
                                  const Eigen::MatrixXd& imageNormals,
                                  const std::vector<char>& vertexExcluded);

} // namespace ims
