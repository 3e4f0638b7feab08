#include "ventsim/field.hpp"

namespace ventsim {

double mean(const ScalarField& f) {
    double sum = 0.0;
    for (double x : f.values) sum += x;
    return sum / static_cast<double>(f.values.size());
}

std::pair<double, std::pair<int, int>> max_cell(const ScalarField& f) {
    const Grid& g = f.grid;
    double best = f.values[0];
    int bi = 0, bj = 0;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            double x = f(i, j);
            if (x > best) {
                best = x;
                bi = i;
                bj = j;
            }
        }
    }
    return {best, {bi, bj}};
}

double min_value(const ScalarField& f) {
    double m = f.values[0];
    for (double x : f.values) m = std::min(m, x);
    return m;
}

double max_value(const ScalarField& f) {
    double m = f.values[0];
    for (double x : f.values) m = std::max(m, x);
    return m;
}

} // namespace ventsim
