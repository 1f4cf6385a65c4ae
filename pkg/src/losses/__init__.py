from src.losses.margin_losses import Margins, loss_cat, loss_picat, loss_piobj
from src.losses.joint import (OBJECTIVE_CAT, OBJECTIVE_PART, BatchLoss, JointObjective, LossBreakdown,
                              joint_loss, loss_joint_cat, loss_joint_part)
