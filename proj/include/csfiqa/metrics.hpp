#pragma once

#include <vector>

namespace csfiqa {

// Spearman rank correlation; ties get average ranks. Throws NumericError when
// either rank vector has zero variance.
double srcc(const std::vector<double>& pred, const std::vector<double>& target);

// Pearson linear correlation. Throws NumericError on zero variance.
double plcc(const std::vector<double>& pred, const std::vector<double>& target);

double median(std::vector<double> values);

}  // namespace csfiqa
