void axpy(amrex::MultiFab& y, amrex::Real a, const amrex::MultiFab& x) {
    amrex::Real coeff = a;
    amrex::MultiFab::Saxpy(y, coeff, x, 0, 0, y.nComp(), 0);
}
