#pragma once
#include <cstddef>

namespace mhrn {

// 4th-order finite differences on a uniform grid: centered 5-point interior,
// offset/one-sided at the two nodes adjacent to each end (D1 exact through
// x^4, D2 through x^5). out must not alias u. Requires n >= 6.
template <typename T>
void stencil_d1(const T* u, int n, double h, T* out) {
    const double c = 1.0 / (12.0 * h);
    out[0] = (-25.0 * u[0] + 48.0 * u[1] - 36.0 * u[2] + 16.0 * u[3] - 3.0 * u[4]) * c;
    out[1] = (-3.0 * u[0] - 10.0 * u[1] + 18.0 * u[2] - 6.0 * u[3] + u[4]) * c;
    for (int i = 2; i < n - 2; ++i)
        out[i] = (u[i - 2] - 8.0 * u[i - 1] + 8.0 * u[i + 1] - u[i + 2]) * c;
    out[n - 2] = (3.0 * u[n - 1] + 10.0 * u[n - 2] - 18.0 * u[n - 3] + 6.0 * u[n - 4] - u[n - 5]) * c;
    out[n - 1] = (25.0 * u[n - 1] - 48.0 * u[n - 2] + 36.0 * u[n - 3] - 16.0 * u[n - 4] + 3.0 * u[n - 5]) * c;
}

template <typename T>
void stencil_d2(const T* u, int n, double h, T* out) {
    const double c = 1.0 / (12.0 * h * h);
    out[0] = (45.0 * u[0] - 154.0 * u[1] + 214.0 * u[2] - 156.0 * u[3] + 61.0 * u[4] - 10.0 * u[5]) * c;
    out[1] = (10.0 * u[0] - 15.0 * u[1] - 4.0 * u[2] + 14.0 * u[3] - 6.0 * u[4] + u[5]) * c;
    for (int i = 2; i < n - 2; ++i)
        out[i] = (-u[i - 2] + 16.0 * u[i - 1] - 30.0 * u[i] + 16.0 * u[i + 1] - u[i + 2]) * c;
    out[n - 2] = (10.0 * u[n - 1] - 15.0 * u[n - 2] - 4.0 * u[n - 3] + 14.0 * u[n - 4] - 6.0 * u[n - 5] + u[n - 6]) * c;
    out[n - 1] = (45.0 * u[n - 1] - 154.0 * u[n - 2] + 214.0 * u[n - 3] - 156.0 * u[n - 4] + 61.0 * u[n - 5] - 10.0 * u[n - 6]) * c;
}

// radial derivatives of a 2D (r*, theta) field stored theta-contiguous,
// index (i, j) -> i*nth + j; differentiates along i for every j
template <typename T>
void stencil_d1_radial(const T* u, int nr, int nth, double h, T* out) {
    const double c = 1.0 / (12.0 * h);
    auto row = [&](int i) { return u + static_cast<std::ptrdiff_t>(i) * nth; };
    for (int j = 0; j < nth; ++j) {
        out[0 * nth + j] = (-25.0 * row(0)[j] + 48.0 * row(1)[j] - 36.0 * row(2)[j] + 16.0 * row(3)[j] - 3.0 * row(4)[j]) * c;
        out[1 * nth + j] = (-3.0 * row(0)[j] - 10.0 * row(1)[j] + 18.0 * row(2)[j] - 6.0 * row(3)[j] + row(4)[j]) * c;
    }
    for (int i = 2; i < nr - 2; ++i) {
        const T* a = row(i - 2);
        const T* b = row(i - 1);
        const T* d = row(i + 1);
        const T* e = row(i + 2);
        T* o = out + static_cast<std::ptrdiff_t>(i) * nth;
        for (int j = 0; j < nth; ++j) o[j] = (a[j] - 8.0 * b[j] + 8.0 * d[j] - e[j]) * c;
    }
    for (int j = 0; j < nth; ++j) {
        out[(nr - 2) * static_cast<std::ptrdiff_t>(nth) + j] =
            (3.0 * row(nr - 1)[j] + 10.0 * row(nr - 2)[j] - 18.0 * row(nr - 3)[j] + 6.0 * row(nr - 4)[j] - row(nr - 5)[j]) * c;
        out[(nr - 1) * static_cast<std::ptrdiff_t>(nth) + j] =
            (25.0 * row(nr - 1)[j] - 48.0 * row(nr - 2)[j] + 36.0 * row(nr - 3)[j] - 16.0 * row(nr - 4)[j] + 3.0 * row(nr - 5)[j]) * c;
    }
}

template <typename T>
void stencil_d2_radial(const T* u, int nr, int nth, double h, T* out) {
    const double c = 1.0 / (12.0 * h * h);
    auto row = [&](int i) { return u + static_cast<std::ptrdiff_t>(i) * nth; };
    for (int j = 0; j < nth; ++j) {
        out[0 * nth + j] = (45.0 * row(0)[j] - 154.0 * row(1)[j] + 214.0 * row(2)[j] - 156.0 * row(3)[j] + 61.0 * row(4)[j] - 10.0 * row(5)[j]) * c;
        out[1 * nth + j] = (10.0 * row(0)[j] - 15.0 * row(1)[j] - 4.0 * row(2)[j] + 14.0 * row(3)[j] - 6.0 * row(4)[j] + row(5)[j]) * c;
    }
    for (int i = 2; i < nr - 2; ++i) {
        const T* a = row(i - 2);
        const T* b = row(i - 1);
        const T* m = row(i);
        const T* d = row(i + 1);
        const T* e = row(i + 2);
        T* o = out + static_cast<std::ptrdiff_t>(i) * nth;
        for (int j = 0; j < nth; ++j) o[j] = (-a[j] + 16.0 * b[j] - 30.0 * m[j] + 16.0 * d[j] - e[j]) * c;
    }
    for (int j = 0; j < nth; ++j) {
        out[(nr - 2) * static_cast<std::ptrdiff_t>(nth) + j] =
            (10.0 * row(nr - 1)[j] - 15.0 * row(nr - 2)[j] - 4.0 * row(nr - 3)[j] + 14.0 * row(nr - 4)[j] - 6.0 * row(nr - 5)[j] + row(nr - 6)[j]) * c;
        out[(nr - 1) * static_cast<std::ptrdiff_t>(nth) + j] =
            (45.0 * row(nr - 1)[j] - 154.0 * row(nr - 2)[j] + 214.0 * row(nr - 3)[j] - 156.0 * row(nr - 4)[j] + 61.0 * row(nr - 5)[j] - 10.0 * row(nr - 6)[j]) * c;
    }
}

} // namespace mhrn
