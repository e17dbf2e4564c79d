#include <cmath>

class Advance {
public:
    void fill(double* data, int n);
    double scale() const {
        return scale_;
    }
private:
    double scale_ = 2.0;
};

void Advance::fill(double* data, int n) {
    for (int i = 0; i < n; ++i) {
        data[i] = scale_ * static_cast<double>(i);
    }
}
