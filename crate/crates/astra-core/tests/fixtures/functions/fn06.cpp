void accumulate(const std::vector<double>& values) {
    double acc = 0.0;
    std::size_t count = values.size();
    for (std::size_t idx = 0; idx < count; ++idx) {
        acc += values[idx];
    }
    sink(acc);
}
