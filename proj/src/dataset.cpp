#include "deeplr/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "deeplr/errors.hpp"

namespace deeplr {

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& field, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw FormatError("dataset line " + std::to_string(line) + ": bad number '" + field + "'");
    }
}

}  // namespace

WeightedDataset::WeightedDataset(std::vector<Record> records) {
    for (auto& r : records) add(std::move(r));
}

void WeightedDataset::add(Record record) {
    if (records_.empty() && input_dim_ == 0) input_dim_ = record.x.size();
    if (record.x.size() != input_dim_) {
        throw DomainError("record has input dimension " + std::to_string(record.x.size()) +
                          ", dataset expects " + std::to_string(input_dim_));
    }
    if (!(record.weight > 0.0) || !std::isfinite(record.weight)) {
        throw DomainError("loss weights must be positive and finite");
    }
    records_.push_back(std::move(record));
}

void WeightedDataset::add(std::vector<double> x, double y, double weight) {
    add(Record{std::move(x), y, weight});
}

double WeightedDataset::total_weight() const {
    double total = 0.0;
    for (const auto& r : records_) total += r.weight;
    return total;
}

void write_dataset_csv(std::ostream& out, const WeightedDataset& data) {
    for (std::size_t j = 0; j < data.input_dim(); ++j) out << 'x' << j << ',';
    out << "y,weight\n";
    for (const auto& r : data) {
        for (double v : r.x) out << format_double(v) << ',';
        out << format_double(r.y) << ',' << format_double(r.weight) << '\n';
    }
}

WeightedDataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("dataset: missing header");
    std::size_t columns = 1;
    for (char ch : line) columns += (ch == ',');
    if (columns < 3 || line.rfind("x0,", 0) != 0 ||
        line.substr(line.size() - 9) != ",y,weight") {
        throw FormatError("dataset: header must be x0,...,xk,y,weight");
    }
    WeightedDataset data(columns - 2);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(parse_double(field, lineno));
        if (fields.size() != columns) {
            throw FormatError("dataset line " + std::to_string(lineno) + ": expected " +
                              std::to_string(columns) + " fields");
        }
        const double weight = fields.back();
        const double y = fields[columns - 2];
        fields.resize(columns - 2);
        data.add(std::move(fields), y, weight);
    }
    return data;
}

void save_dataset(const std::string& path, const WeightedDataset& data) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path);
    write_dataset_csv(out, data);
}

WeightedDataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot read " + path);
    return read_dataset_csv(in);
}

TargetScaler TargetScaler::fit(const WeightedDataset& data) {
    if (data.size() < 2) throw DegenerateDataError("need at least two targets to normalize");
    double mean = 0.0;
    for (const auto& r : data) mean += r.y;
    mean /= static_cast<double>(data.size());
    double ss = 0.0;
    for (const auto& r : data) ss += (r.y - mean) * (r.y - mean);
    const double sd = std::sqrt(ss / static_cast<double>(data.size()));
    if (!(sd > 0.0)) throw DegenerateDataError("targets have zero variance");
    return {mean, sd};
}

WeightedDataset TargetScaler::apply(const WeightedDataset& data) const {
    WeightedDataset out(data.input_dim());
    for (const auto& r : data) out.add(r.x, forward(r.y), r.weight);
    return out;
}

}  // namespace deeplr
