#pragma once

#include <stdexcept>
#include <string>

namespace rsplines {

/// Bad user input: malformed scenario, violated parameter inequality, ...
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

/// Evaluation at a point outside a chart's valid domain (e.g. sphere poles).
class chart_domain_error : public std::domain_error {
public:
    explicit chart_domain_error(const std::string& what) : std::domain_error(what) {}
};

/// Quantity undefined at the requested point (e.g. distance gradient at the base point).
class singularity_error : public std::runtime_error {
public:
    explicit singularity_error(const std::string& what) : std::runtime_error(what) {}
};

/// Integration produced a non-finite state; carries the first bad time.
class divergence_error : public std::runtime_error {
public:
    divergence_error(double t, const std::string& what)
        : std::runtime_error(what), time(t) {}
    double time;
};

/// A hybrid interpolation segment could not be completed.
class segment_error : public std::runtime_error {
public:
    segment_error(int segment, const std::string& what)
        : std::runtime_error(what), segment_index(segment) {}
    int segment_index;
};

}  // namespace rsplines
