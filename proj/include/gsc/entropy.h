#pragma once

#include <random>
#include <vector>

#include "gsc/dct.h"
#include "gsc/field.h"

namespace gsc {

// Factorized zero-location Laplacian over transformed coefficients, one scale
// per (group, plane, channel, frequency band). The quantizer bin has total
// width 2/qStep, matching the training noise support.
struct EntropyModel {
  double qStep = 256.0;
  BlockSpec block{4, 4};
  int groups = kGroupCount;
  int planes = kPlanesPerGroup;
  int channels = 0;
  std::vector<double> scales;  // groups * planes * channels * (block.rows*block.cols)

  int bandCount() const { return block.rows * block.cols; }
  size_t scaleIndex(int g, int p, int c, int band) const {
    return ((static_cast<size_t>(g) * planes + p) * channels + c) * bandCount() + band;
  }
  double scaleAt(int g, int p, int c, int band) const {
    return scales[scaleIndex(g, p, c, band)];
  }
};

EntropyModel makeEntropyModel(int channels, double qStep, BlockSpec block = {4, 4});

// Maximum-likelihood refit: each band's scale becomes the mean absolute
// coefficient over that band, floored for stability.
void fitScales(EntropyModel& model, const TriPlaneField& field);

// Adds i.i.d. uniform noise on (-1/qStep, +1/qStep) to every coefficient.
void perturb(std::vector<double>& coeffs, double qStep, std::mt19937_64& rng);

// -log2 of the Laplacian mass on the width-2/qStep bin centered at value,
// floored at 2^-32. Always positive, at most 32.
double coefficientBits(double value, double scale, double qStep);

// d(coefficientBits)/d(value); zero inside the floored region.
double coefficientBitsGrad(double value, double scale, double qStep);

// Bits for one plane channel: block DCT, optional noise, then the sum of
// per-coefficient bin costs under the band's scale.
double entropyOfChannel(const std::vector<double>& channel, int resolution,
                        const EntropyModel& model, int g, int p, int c,
                        std::mt19937_64* noiseRng = nullptr);

struct ChannelImportance {
  // Flat group-major layout: index = group * channels + channel.
  std::vector<double> ci;
  std::vector<double> weights;
  bool capped = false;
};

// weights[c] = ci[0] / ci[c]; zero scores cap at weightCap.
ChannelImportance channelWeights(const std::vector<double>& ci, double weightCap = 1e3);

// Weighted sum of per-channel entropies over every plane channel of every
// group; one weight is shared by a channel's three planes. Pass empty weights
// for the unweighted (all-ones) sum.
double entropyLoss(const TriPlaneField& field, const EntropyModel& model,
                   const std::vector<double>& weights, std::mt19937_64* noiseRng = nullptr);

// Sum of absolute values over all plane parameters.
double l1Loss(const TriPlaneField& field);

}  // namespace gsc
