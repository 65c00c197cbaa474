"""
Schemas Package
Re-exports all schemas for convenient importing.
"""

from app.schemas.operator import *
from app.schemas.scatter import *
from app.schemas.state import *
from app.schemas.info import *
from app.schemas.phase import *
from app.schemas.experiment import *
