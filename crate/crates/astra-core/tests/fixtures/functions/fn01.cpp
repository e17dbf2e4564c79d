double kernel(double dx) {
    double sum = 0.0;
    double term = dx * dx;
    sum += term;
    return sum;
}
