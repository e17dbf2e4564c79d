void copy_fab(const amrex::MultiFab& src, amrex::MultiFab& dst) {
    amrex::MultiFab::Copy(dst, src, 0, 0, src.nComp(), src.nGrow());
}
