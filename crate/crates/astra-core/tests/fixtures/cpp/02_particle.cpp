struct Particle {
    double pos[3];
    double vel[3];
    double mass = 1.0;
    int id;
};
