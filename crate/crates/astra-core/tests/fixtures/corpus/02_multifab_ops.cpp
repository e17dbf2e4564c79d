// AI_METADATA
// example: MultiFab
// task_type: MULTIFAB_COPY
// user_intent:
// 1) Create a copy of a MultiFab from another
// 2) Copy multifab data into a new multifab
// 3) Duplicate a multifab with the same distribution
// keywords: MultiFab, Copy, boxArray, DistributionMap, nComp, nGrow
// inputs: MultiFab src
// outputs: MultiFab dst holding a copy of src

amrex::MultiFab dst(src.boxArray(), src.DistributionMap(), src.nComp(), src.nGrow());
amrex::MultiFab::Copy(dst, src, 0, 0, src.nComp(), src.nGrow());

// AI_METADATA
// example: MultiFab
// task_type: MULTIFAB_LINCOMB
// user_intent:
// 1) Compute a linear combination of two multifabs
// 2) MultiFab linear combination a*x + b*y
// 3) Blend two multifabs with coefficients
// keywords: MultiFab, LinComb, Saxpy
// inputs: Real a, MultiFab x, Real b, MultiFab y
// outputs: MultiFab out = a*x + b*y

amrex::MultiFab::LinComb(out, a, x, 0, b, y, 0, 0, out.nComp(), 0);

// AI_METADATA
// example: MultiFab
// task_type: MULTIFAB_DOT
// user_intent:
// 1) Compute the dot product of two multifabs
// 2) Inner product over all cells of two multifabs
// keywords: MultiFab, Dot
// inputs: MultiFab x, MultiFab y
// outputs: Real dot product

amrex::Real result = amrex::MultiFab::Dot(x, 0, y, 0, 1, 0);

// AI_METADATA
// example: MultiFab
// task_type: MULTIFAB_SWAP
// user_intent:
// 1) Swap the contents of two multifabs without copying
// 2) Exchange two multifab buffers
// keywords: MultiFab, swap, std::swap
// inputs: MultiFab a, MultiFab b
// outputs: a and b exchanged

std::swap(a, b);
