#pragma once

#include <string>
#include <utility>
#include <vector>

namespace crcsim {

/// Annual other-cause mortality rates mu(a) over a contiguous integer age
/// range. Loaded from a two-column CSV `age,rate` with a header line.
class LifeTable {
public:
    static LifeTable from_csv(const std::string& path);
    static LifeTable from_rows(std::vector<std::pair<int, double>> rows);

    /// Rate at integer age; throws std::out_of_range outside the table.
    double rate(int age) const;

    int min_age() const { return min_age_; }
    int max_age() const { return min_age_ + static_cast<int>(rates_.size()) - 1; }

private:
    LifeTable(int min_age, std::vector<double> rates)
        : min_age_(min_age), rates_(std::move(rates)) {}

    int min_age_ = 0;
    std::vector<double> rates_;
};

}  // namespace crcsim
