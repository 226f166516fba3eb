#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace deeplr {

struct Record {
    std::vector<double> x;
    double y = 0.0;
    double weight = 1.0;
};

// Records with a shared input dimension and strictly positive loss weights.
class WeightedDataset {
public:
    WeightedDataset() = default;
    explicit WeightedDataset(std::size_t input_dim) : input_dim_(input_dim) {}
    explicit WeightedDataset(std::vector<Record> records);

    void add(Record record);
    void add(std::vector<double> x, double y, double weight = 1.0);

    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    std::size_t input_dim() const noexcept { return input_dim_; }

    const Record& operator[](std::size_t i) const { return records_[i]; }
    const std::vector<Record>& records() const noexcept { return records_; }
    auto begin() const noexcept { return records_.begin(); }
    auto end() const noexcept { return records_.end(); }

    double total_weight() const;

private:
    std::size_t input_dim_ = 0;
    std::vector<Record> records_;
};

// CSV with header `x0,...,xk,y,weight`.
void write_dataset_csv(std::ostream& out, const WeightedDataset& data);
WeightedDataset read_dataset_csv(std::istream& in);
void save_dataset(const std::string& path, const WeightedDataset& data);
WeightedDataset load_dataset(const std::string& path);

// Zero-mean, unit-variance affine map of regression targets.
struct TargetScaler {
    double mean = 0.0;
    double scale = 1.0;

    static TargetScaler fit(const WeightedDataset& data);
    double forward(double y) const { return (y - mean) / scale; }
    double inverse(double z) const { return z * scale + mean; }
    WeightedDataset apply(const WeightedDataset& data) const;
};

}  // namespace deeplr
