int area(int w, int h) {
    int base = w, extra = h, total = 0;
    total = base * extra;
    return total;
}
