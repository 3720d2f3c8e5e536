#pragma once

#include <cstdint>
#include <vector>

#include "cmm/dataset.hpp"
#include "cmm/model.hpp"

namespace cmm {

// i.i.d. draws from the mode multinomial M_s(r, r, r, (1-3r)/(s-3), ...):
// three modes of mass r on the first three categories, uniform elsewhere.
// Requires s > 3, 0 < r < 1/3 and r > (1-3r)/(s-3).
std::vector<std::uint32_t> gen_modes_multinomial(int n, int s, double r, std::uint64_t seed);

struct LabeledDataset {
  CategoricalDataset data;
  std::vector<int> labels;
};

// Sample n individuals from a CMM: class by pi, block crossing by the
// expanded alpha, crossings decoded back to the original variables.
LabeledDataset gen_cmm(const ModelSpec& spec, const MixtureParams& params,
                       const std::vector<long>& var_mods, int n, std::uint64_t seed);

// The benchmark two-class generator of the simulation studies: six ternary
// variables, three 9-crossing blocks, ell = 2 everywhere, pi = (.5, .5),
// mode masses (0.4, 0.4); class 1 modes at crossings {0, 1}, class 2 at
// {7, 8} of each block.
struct BenchmarkCmm {
  ModelSpec spec;
  MixtureParams params;
  std::vector<long> var_mods;
};
BenchmarkCmm benchmark_cmm();

// Misspecified pairwise-coupled generator: two classes, six ternary uniform
// marginals; within a class, coupled pairs satisfy x^{j+1} = x^j with
// probability lambda (else independent uniform). Class 1 couples (0,1),
// (2,3), (4,5); class 2 couples (1,2), (3,4) with variables 0 and 5 free.
LabeledDataset gen_misspecified(int n, double lambda, std::uint64_t seed);

// Exact cell probability of the misspecified mixture for a full cell vector.
double misspecified_cell_prob(const std::vector<std::uint32_t>& cell, double lambda);

}  // namespace cmm
