#include "crcsim/life_table.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crcsim/csv.hpp"

namespace crcsim {

LifeTable LifeTable::from_rows(std::vector<std::pair<int, double>> rows) {
    if (rows.empty()) throw std::runtime_error("life table: no rows");
    std::sort(rows.begin(), rows.end());
    const int min_age = rows.front().first;
    std::vector<double> rates;
    rates.reserve(rows.size());
    int expect = min_age;
    for (const auto& [age, rate] : rows) {
        if (age != expect)
            throw std::runtime_error("life table: ages must be contiguous, gap at " +
                                     std::to_string(expect));
        if (!std::isfinite(rate) || rate < 0.0)
            throw std::runtime_error("life table: rate at age " + std::to_string(age) +
                                     " must be finite and >= 0");
        rates.push_back(rate);
        ++expect;
    }
    return LifeTable(min_age, std::move(rates));
}

LifeTable LifeTable::from_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    const int c_age = t.column("age");
    const int c_rate = t.column("rate");
    std::vector<std::pair<int, double>> rows;
    rows.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::string ctx = path + " row " + std::to_string(i + 1);
        rows.emplace_back(static_cast<int>(parse_int(t.rows[i][c_age], ctx)),
                          parse_double(t.rows[i][c_rate], ctx));
    }
    return from_rows(std::move(rows));
}

double LifeTable::rate(int age) const {
    if (age < min_age_ || age > max_age())
        throw std::out_of_range("life table: age " + std::to_string(age) +
                                " outside [" + std::to_string(min_age_) + "," +
                                std::to_string(max_age()) + "]");
    return rates_[static_cast<std::size_t>(age - min_age_)];
}

}  // namespace crcsim
