// AI_METADATA
// example: MultiFab
// task_type: MULTIFAB_FILL_PARALLELFOR
// user_intent:
// 1) Fill the field data structure for amrex using a
//    AMReX-style ParallelFor loop
// 2) Fill a multifab using ParallelFor
// 3) Populate the multifab with a parallelfor loop
// 4) For loop in amrex-style GPU-enabled way
// keywords: MFIter, ParallelFor, Array4, GPU, validbox
// inputs: MultiFab mf, dx
// outputs: mf data initialized

for(amrex::MFIter mfi(mf); mfi.isValid(); ++mfi){
    const amrex::Box& bx = mfi.validbox();
    const amrex::Array4<amrex::Real>& mf_array = mf.array(mfi);

    amrex::ParallelFor(bx, [=] AMREX_GPU_DEVICE(int i, int j, int k){

        amrex::Real x = (i+0.5) * dx[0];
        amrex::Real y = (j+0.5) * dx[1];
        amrex::Real z = (k+0.5) * dx[2];

        amrex::Real r_squared = ((x-0.5)*(x-0.5)+(y-0.5)*(y-0.5)+
                                (z-0.5)*(z-0.5))/0.01;

        mf_array(i,j,k) = 1.0 + std::exp(-r_squared);
    });
}

// AI_METADATA
// example: MultiFab
// task_type: NESTED_LOOP_TO_KERNEL
// user_intent:
// 1) Convert a 3D nested for loop into an AMReX kernel
// 2) Port a triple nested loop to ParallelFor
// 3) Rewrite serial ijk loops as a GPU kernel
// keywords: ParallelFor, Box, Array4, lbound, ubound
// inputs: Box bx, Array4 data
// outputs: data initialized over bx

amrex::ParallelFor(bx, [=] AMREX_GPU_DEVICE(int i, int j, int k){
    data(i,j,k) = 0.0;
});

// AI_METADATA
// example: MultiFab
// task_type: MULTIFAB_SETVAL
// user_intent:
// 1) Set every cell of a multifab to a constant value
// 2) Initialize a multifab with a uniform value
// keywords: MultiFab, setVal
// inputs: MultiFab mf, Real value
// outputs: mf cells equal value

mf.setVal(value);

// AI_METADATA
// example: MultiFab
// task_type: MULTIFAB_REDUCE_SUM
// user_intent:
// 1) Sum all cells of a multifab
// 2) Compute a global reduction over a multifab
// keywords: MultiFab, sum, ParallelDescriptor
// inputs: MultiFab mf
// outputs: Real total

amrex::Real total = mf.sum(0);
amrex::ParallelDescriptor::ReduceRealSum(total);
