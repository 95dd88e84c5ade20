#ifndef ISAC_TEST_HELPERS_HPP
#define ISAC_TEST_HELPERS_HPP

#include "isac/rng.hpp"
#include "isac/signal_model.hpp"

namespace isac::test {

inline CMat random_complex_matrix(int rows, int cols, Philox& rng) {
    CMat H(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            H(i, j) = std::complex<double>(rng.gaussian(), rng.gaussian()) / std::sqrt(2.0);
    return H;
}

inline Vec random_vector(int n, Philox& rng) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.gaussian();
    return v;
}

inline CVec random_complex_vector(int n, Philox& rng) {
    CVec v(n);
    for (int i = 0; i < n; ++i)
        v(i) = std::complex<double>(rng.gaussian(), rng.gaussian()) / std::sqrt(2.0);
    return v;
}

}  // namespace isac::test

#endif
