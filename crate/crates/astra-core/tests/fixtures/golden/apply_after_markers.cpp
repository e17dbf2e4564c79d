<<<<<<< current
double placeholder(double* data, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        total += data[i];
    }
    return total;
}
=======
double placeholder(double* data, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        total += 2.0 * data[i];
    }
    return total;
}
>>>>>>> astra:replay-model
