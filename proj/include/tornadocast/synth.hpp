#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tornadocast/dataio.hpp"

namespace tornadocast {

struct SynthConfig {
    std::size_t n_samples = 5000;
    std::size_t n_features = 16;
    double tornado_rate = 0.023;  // positives fraction, matches the archive's base rate
    double separability = 4.0;    // class-mean distance in noise-sigma units
    std::uint64_t seed = 42;
};

/// Ground truth of a generated dataset: negatives ~ N(0, I), positives
/// shifted by separability * direction. Everything the Bayes-optimal
/// classifier needs is recorded so accuracy/AUC ceilings are exact.
struct SynthTruth {
    std::vector<double> direction;  // unit vector
    double separability = 0.0;
    double tornado_rate = 0.0;
    std::size_t n_samples = 0;
    std::size_t n_positives = 0;
    std::uint64_t seed = 0;
    double bayes_threshold = 0.0;  // on the projection onto `direction`
    double bayes_accuracy = 0.0;
    double bayes_auc = 0.0;

    std::string to_json() const;
};

struct SynthResult {
    Dataset samples;
    SynthTruth truth;
};

/// Deterministic in config; label count is round(n_samples * tornado_rate)
/// exactly, placement shuffled. Dates and locations are assigned
/// round-robin over a small station set so the join/sequence code paths
/// run on synthetic data too.
SynthResult generate(const SynthConfig& config);

/// Closed-form Bayes-optimal accuracy for the generator's two-Gaussian
/// mixture (equal covariance, prior = positive_rate).
double bayes_accuracy(double separability, double positive_rate);

/// AUC of the Bayes score: Phi(separability / sqrt(2)).
double bayes_auc(double separability);

double normal_cdf(double x);

/// Writes a raw weather CSV + storm-event CSV pair shaped like the
/// historical archive the published study used: 49 stations, every day of
/// 1998-2007 (178,948 rows), the study's yearly storm counts (4,081 events
/// total), ~28 attributes including non-numeric and sparse columns so the
/// cleaning stages all fire.
void write_archive_fixture(const std::string& weather_path, const std::string& events_path,
                           std::uint64_t seed = 7);

}  // namespace tornadocast
