import os

from sqlalchemy import Boolean, Column, DateTime, Float, ForeignKey, Integer, String, Text
from sqlalchemy import create_engine
from sqlalchemy.ext.declarative import declarative_base
from sqlalchemy.orm import sessionmaker

from config import SQLALCHEMY_DATABASE_URL

# 数据库目录不存在的时候自动创建目录。TODO：如果是mysql之类的数据库，这里的代码估计是不兼容的
folder_path = os.path.dirname(SQLALCHEMY_DATABASE_URL.replace("sqlite:///", ""))
if folder_path and not os.path.exists(folder_path):
    os.makedirs(folder_path)

# 实验结果数据库
BaseModel = declarative_base()
engine = create_engine(
    SQLALCHEMY_DATABASE_URL,
    connect_args={"check_same_thread": False}
)
DatabaseSession = sessionmaker(autocommit=False, autoflush=False, bind=engine)


def create_tables():
    """
    创建数据库表
    """
    BaseModel.metadata.create_all(bind=engine)


class RunModel(BaseModel):
    __tablename__ = "run"
    id = Column(Integer, primary_key=True)
    experiment = Column(String(64), index=True)  # 实验名，例如 example1
    created_time = Column(DateTime, index=True)  # 运行时间
    config_hash = Column(String(40), index=True)  # 配置的sha1，用于判断两次运行是否可比
    config_json = Column(Text)  # 完整配置
    slope = Column(Float, nullable=True)  # 拟合的收敛阶，层级不足3个时为空
    stagnated = Column(Boolean, default=False)  # 收敛阶接近0
    version = Column(String(16))  # 代码版本


class LevelResultModel(BaseModel):
    __tablename__ = "level_result"
    id = Column(Integer, primary_key=True)
    run_id = Column(Integer, ForeignKey("run.id", ondelete="CASCADE"), index=True)
    dofs = Column(Integer)  # #T_Y
    s = Column(Float, nullable=True)  # 识别出的 s
    j = Column(Float, nullable=True)  # j(s)
    iterations = Column(Integer, nullable=True)  # 二分法迭代次数 N
    wall_time = Column(Float)  # 用时，单位秒
    e = Column(Float, nullable=True)  # 噪声幅度，只有噪声实验有
    error = Column(Text, nullable=True)  # 该层级失败时的错误信息
