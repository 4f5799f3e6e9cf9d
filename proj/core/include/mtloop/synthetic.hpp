#pragma once

#include <cstdint>

#include "mtloop/corpus.hpp"

namespace mtloop {

// Desk-scale stand-in for a low-resource parallel corpus. Source words are
// syllabary strings drawn from a Zipf distribution, so many of them are
// rare; each maps to one or two target words, some have two competing
// translations, and some words are rendered after their right neighbour on
// the target side.
struct SyntheticOptions {
  int vocabulary = 400;
  int min_length = 2;
  int max_length = 8;
  double zipf_exponent = 1.1;
  double ambiguity = 0.15;   // share of words with a second translation
  double swap_rate = 0.15;   // share of words translated after their neighbour
};

ParallelCorpus synthetic_corpus(std::size_t pairs, std::uint64_t seed, const SyntheticOptions& options = {});

}  // namespace mtloop
