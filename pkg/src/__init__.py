# src package: 1-bit transmissive RIS simulator
