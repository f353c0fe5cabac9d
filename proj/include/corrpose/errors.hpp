#pragma once

#include <stdexcept>
#include <string>

namespace corrpose {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// geometry
struct NonPositiveDepth : Error {
    explicit NonPositiveDepth(double z)
        : Error("point has non-positive camera depth z=" + std::to_string(z)), depth(z) {}
    double depth;
};

// mesh
struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error(what), line_number(0) {}
    ParseError(const std::string& what, int line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_number(line) {}
    int line_number;  // 0 when no line applies
};
struct UnsupportedFormat : Error {
    using Error::Error;
};
struct DegenerateMesh : Error {
    using Error::Error;
};

// raster
struct DuplicateObjectId : Error {
    explicit DuplicateObjectId(int id)
        : Error("duplicate object id " + std::to_string(id)), object_id(id) {}
    int object_id;
};

// correspond
struct MissingLookup : Error {
    explicit MissingLookup(int id)
        : Error("no color lookup registered for object id " + std::to_string(id)), object_id(id) {}
    int object_id;
};

// posesolve
struct DegenerateConfiguration : Error {
    using Error::Error;
};
struct InsufficientCorrespondences : Error {
    explicit InsufficientCorrespondences(std::size_t n)
        : Error("need at least 4 correspondences, got " + std::to_string(n)) {}
};
struct NoValidHypothesis : Error {
    NoValidHypothesis() : Error("no hypothesis reached the inlier minimum") {}
};

// refine
struct EmptyRender : Error {
    using Error::Error;
};

// metrics
struct TooManyPoints : Error {
    explicit TooManyPoints(std::size_t n)
        : Error("point set capped at 10000, got " + std::to_string(n)) {}
};
struct UnnormalizedProbabilities : Error {
    using Error::Error;
};
struct ShapeMismatch : Error {
    using Error::Error;
};

}  // namespace corrpose
