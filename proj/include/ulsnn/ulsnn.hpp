#pragma once

#include "ulsnn/matcore.hpp"
#include "ulsnn/gemm.hpp"
#include "ulsnn/nn.hpp"
#include "ulsnn/optim.hpp"
#include "ulsnn/simnet.hpp"
#include "ulsnn/cluster.hpp"
#include "ulsnn/trainer.hpp"
#include "ulsnn/datagen.hpp"
